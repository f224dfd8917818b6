"""
Admissibility gate for (alpha, beta, p, c) and empirical estimates of the
Gagliardo-Nirenberg and Hardy-Littlewood-Sobolev constants.

The constants are running maxima of ratios over seeded random states, so they
are lower bounds of the sharp ones and every use of them is heuristic.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from pinewton import energy, lattice, specfun, state
from pinewton.exceptions import DomainError

logger = logging.getLogger(__name__)

HLS_EXPONENT = 4.0 / 3.0
LOWER_BOUND_EXPONENT = 8.0 / 3.0

# Random-state family
WIDTH_RANGE = (0.5, 3.0)
CHARGE_RANGE = (0.0, 3.0)
GAUGE_RANGE = (0.25, 4.0)


class GateCase(Enum):
    NEG_BETA = 'NEG_BETA'
    SUBCRITICAL = 'SUBCRITICAL'
    CRITICAL_MASS_OK = 'CRITICAL_MASS_OK'
    REJECTED = 'REJECTED'


@dataclass(frozen=True)
class GateDecision:
    admissible: bool
    case_tag: GateCase
    detail: str

    @property
    def heuristic(self):
        """The critical-mass case compares c against an empirical constant"""
        return self.case_tag is GateCase.CRITICAL_MASS_OK

    def to_dict(self):
        return {
            'admissible': self.admissible,
            'case_tag': self.case_tag.value,
            'detail': self.detail,
            'heuristic': self.heuristic
        }


@dataclass(frozen=True)
class ConstantEstimates:
    p: float
    k_gn_lower: float
    k_gn_tilde_lower: float
    k_hls_ratio_max: float
    k_gn_lower_83: float
    k_gn_tilde_lower_83: float
    sample_count: int
    seed: int
    skipped: int = 0

    def to_dict(self):
        return {
            'p': self.p,
            'k_gn_lower': self.k_gn_lower,
            'k_gn_tilde_lower': self.k_gn_tilde_lower,
            'k_hls_ratio_max': self.k_hls_ratio_max,
            'k_gn_lower_83': self.k_gn_lower_83,
            'k_gn_tilde_lower_83': self.k_gn_tilde_lower_83,
            'sample_count': self.sample_count,
            'seed': self.seed,
            'skipped': self.skipped
        }


@dataclass(frozen=True)
class SampleRatios:
    """Ratios of one state; None where the denominator vanishes"""
    gn: float
    gn_tilde: float
    hls: float
    gn_83: float
    gn_tilde_83: float

    def as_tuple(self):
        return (self.gn, self.gn_tilde, self.hls, self.gn_83, self.gn_tilde_83)


def admissible(alpha, beta, p, c, k_tilde):
    """Decide which existence case (if any) covers (alpha, beta, p, c)"""
    if not c > 0:
        raise DomainError('mass c must be positive')
    if not k_tilde > 0:
        raise DomainError('k_tilde must be positive')

    if not p > 2:
        return GateDecision(False, GateCase.REJECTED, 'p must exceed 2')
    if beta <= 0:
        return GateDecision(True, GateCase.NEG_BETA, f'beta = {beta} <= 0 and p = {p} > 2')
    if p < 4:
        return GateDecision(True, GateCase.SUBCRITICAL, f'beta = {beta} > 0 and 2 < p = {p} < 4')
    if p == 4:
        critical = 2.0 / (beta * k_tilde)
        if c < critical:
            return GateDecision(
                True, GateCase.CRITICAL_MASS_OK,
                f'c = {c} < 2/(beta K~_GN) = {critical:.6g} (heuristic: K~_GN = {k_tilde:.6g} is an empirical lower bound)'
            )
        return GateDecision(False, GateCase.REJECTED, f'c = {c} >= 2/(beta K~_GN) = {critical:.6g}')
    return GateDecision(False, GateCase.REJECTED, f'beta = {beta} > 0 requires p <= 4, got p = {p}')


def random_state(grid, rng):
    """phi = (a + b x1) exp(-|x|^2 / w^2) with random charge and gauge"""
    x, y = grid.mesh()
    width = rng.uniform(*WIDTH_RANGE)
    a = complex(rng.normal(), rng.normal())
    b = complex(rng.normal(), rng.normal())
    envelope = np.exp(-(x * x + y * y) / width ** 2)
    phi = lattice.Field(grid, (a + b * x) * envelope)

    modulus = rng.uniform(*CHARGE_RANGE)
    q = modulus * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
    lam = rng.uniform(*GAUGE_RANGE)
    return state.assemble(phi, q, lam)


def inverse_distance(r):
    return 1.0 / r


def _inverse_distance_origin(spacing):
    # (1/h^2) * integral of 1/|z| over [-h/2, h/2]^2
    return 4.0 * math.log1p(math.sqrt(2.0)) / spacing


def _ratio(numerator, denominator):
    if not denominator > 0 or not math.isfinite(denominator):
        return None
    return numerator / denominator


def _gn_ratio(s, p):
    """||u||_p^p / (||grad phi||^(p-2) ||phi||^2 + |q|^p / lambda)"""
    h2 = s.grid.spacing ** 2
    grad = math.sqrt(lattice.dirichlet_energy(s.phi))
    phi_mass = h2 * float(np.sum(np.abs(s.phi.values) ** 2))
    denominator = grad ** (p - 2) * phi_mass + abs(s.charge_q) ** p / s.gauge_lambda
    return _ratio(energy.c_p(s, p), denominator)


def _gn_tilde_ratio(s, p):
    """
    ||u||_p^p / ((||grad phi||^(p-2) + |q|^(p-2)) ||u||^2) in the convenient gauge.
    Uncharged states reduce to the classical ratio with phi = u.
    """
    m = state.mass(s)
    if s.charge_q != 0 and m > 0:
        s = state.convenient_gauge(s)
    grad = math.sqrt(lattice.dirichlet_energy(s.phi))
    denominator = (grad ** (p - 2) + abs(s.charge_q) ** (p - 2)) * m
    return _ratio(energy.c_p(s, p), denominator)


def _hls_ratio(s):
    """<|u|^2, (1/|x|) * |u|^2> / || |u|^2 ||_{4/3}^2"""
    grid = s.grid
    h2 = grid.spacing ** 2
    density = np.abs(state.values(s)) ** 2
    potential = lattice.radial_convolve(
        lattice.Field(grid, density), inverse_distance, _inverse_distance_origin(grid.spacing)
    ).values
    numerator = h2 * float(np.sum(density * potential))
    norm = (h2 * float(np.sum(density ** HLS_EXPONENT))) ** (1.0 / HLS_EXPONENT)
    return _ratio(numerator, norm * norm)


def sample_ratios(s, p):
    """All ratios tracked by the estimator for one state"""
    if not p > 2:
        raise DomainError('nonlinearity exponent p must exceed 2')
    return SampleRatios(
        gn=_gn_ratio(s, p),
        gn_tilde=_gn_tilde_ratio(s, p),
        hls=_hls_ratio(s),
        gn_83=_gn_ratio(s, LOWER_BOUND_EXPONENT),
        gn_tilde_83=_gn_tilde_ratio(s, LOWER_BOUND_EXPONENT)
    )


def _sample_states(grid, sample_count, seed):
    for sequence in np.random.SeedSequence(seed).spawn(sample_count):
        yield random_state(grid, np.random.default_rng(sequence))


def estimate_from_states(states, p, seed=0):
    """Running maxima of sample_ratios over the given states"""
    if not p > 2:
        raise DomainError('nonlinearity exponent p must exceed 2')

    maxima = [0.0] * 5
    count = 0
    skipped = 0
    for s in states:
        count += 1
        ratios = sample_ratios(s, p).as_tuple()
        if any(r is None for r in ratios):
            skipped += 1
        for i, r in enumerate(ratios):
            if r is not None and r > maxima[i]:
                maxima[i] = r

    if count < 1:
        raise DomainError('sample_count must be at least 1')
    if not all(m > 0 for m in maxima):
        raise DomainError(f'no usable samples among {count} ({skipped} degenerate)')

    return ConstantEstimates(
        p=float(p),
        k_gn_lower=maxima[0],
        k_gn_tilde_lower=maxima[1],
        k_hls_ratio_max=maxima[2],
        k_gn_lower_83=maxima[3],
        k_gn_tilde_lower_83=maxima[4],
        sample_count=count,
        seed=seed,
        skipped=skipped
    )


def estimate_gn_constants(p, sample_count, seed, grid):
    """Empirical lower bounds of the GN and HLS constants from seeded random states"""
    if sample_count < 1:
        raise DomainError('sample_count must be at least 1')
    est = estimate_from_states(_sample_states(grid, sample_count, seed), p, seed)
    logger.info(
        f"GN estimates p={p}: K_GN >= {est.k_gn_lower:.6g}, K~_GN >= {est.k_gn_tilde_lower:.6g}, "
        f"HLS ratio <= {est.k_hls_ratio_max:.6g} ({sample_count} samples, seed {seed}, {est.skipped} skipped)"
    )
    return est


def held_out_violations(est, grid, sample_count, seed, inflation=1.5):
    """Count samples of a fresh batch whose ratios exceed inflation x the estimates"""
    limits = (est.k_gn_lower, est.k_gn_tilde_lower, est.k_hls_ratio_max,
              est.k_gn_lower_83, est.k_gn_tilde_lower_83)
    violations = 0
    for s in _sample_states(grid, sample_count, seed):
        ratios = sample_ratios(s, est.p).as_tuple()
        if any(r is not None and r > inflation * k for r, k in zip(ratios, limits)):
            violations += 1
    if violations:
        logger.warning(f"{violations} of {sample_count} held-out samples exceed {inflation} x the estimates")
    return violations


def gate_for(alpha, beta, p, c, grid, samples, seed):
    """Gate decision, estimating K~_GN(p) only when the critical-mass case can apply"""
    k_tilde = 1.0
    if beta > 0 and p == 4:
        k_tilde = estimate_gn_constants(p, samples, seed, grid).k_gn_tilde_lower
    decision = admissible(alpha, beta, p, c, k_tilde)
    if not decision.admissible:
        logger.warning(f"Parameters outside the existence region: {decision.detail}")
    return decision


def coercivity_report(s, alpha, beta, p, est):
    """
    Evaluate the energy lower bounds with the empirical constants and report
    the slack E(u) - bound. Diagnostic only.
    """
    if abs(est.p - p) > 0:
        raise DomainError(f'estimates were computed for p = {est.p}, not {p}')

    lines = [f'Coercivity report (alpha={alpha}, beta={beta}, p={p})']
    q = s.charge_q

    if q == 0:
        grad = math.sqrt(lattice.dirichlet_energy(s.phi))
        norm = math.sqrt(state.mass(s))
        bound = 0.5 * grad ** 2 - 0.25 * est.k_hls_ratio_max * est.k_gn_lower_83 * norm ** 3 * grad
        if beta > 0:
            bound -= (beta / p) * est.k_gn_lower * norm ** 2 * grad ** (p - 2)
        lines.append('branch: uncharged (phi only)')
    else:
        s = state.convenient_gauge(s)
        m = state.mass(s)
        norm = math.sqrt(m)
        charge = abs(q)
        grad = math.sqrt(lattice.dirichlet_energy(s.phi))
        phi_mass = s.grid.spacing ** 2 * float(np.sum(np.abs(s.phi.values) ** 2))
        bound = (
            0.5 * grad ** 2
            + phi_mass * charge ** 2 / (2.0 * m)
            + 0.5 * (alpha + (specfun.EULER_GAMMA + math.log(charge / (2.0 * norm))) / (2.0 * math.pi) - 1.0) * charge ** 2
            - est.k_hls_ratio_max * est.k_gn_tilde_lower_83 * norm ** 3 * (grad + charge) / (2.0 * math.sqrt(2.0))
        )
        if beta > 0:
            bound -= (beta / p) * est.k_gn_tilde_lower * m * (grad ** (p - 2) + charge ** (p - 2))
        lines.append(f'branch: charged, convenient gauge lambda = {s.gauge_lambda:.6g}')

    value = energy.total_energy(s, alpha, beta, p).total
    lines.append(f'energy:       {value:.12g}')
    lines.append(f'lower bound:  {bound:.12g}')
    lines.append(f'slack:        {value - bound:.12g}')
    lines.append(f'heuristic: constants are empirical lower bounds ({est.sample_count} samples, seed {est.seed})')

    text = '\n'.join(lines)
    logger.debug(text)
    return text
