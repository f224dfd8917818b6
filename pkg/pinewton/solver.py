"""
Ground states: minimization of the discrete energy on the mass sphere ||u||^2 = c.

Descent runs at fixed gauge over (phi, q). The direction is the gradient
preconditioned by (-laplacian + shift)^-1 on phi and a scalar on q, with the
mass-gradient component removed in that metric. Every trial point is
renormalized to mass c and accepted by Armijo backtracking.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional

import numpy as np

from config import Config
from pinewton import bounds, energy, lattice, specfun, state
from pinewton.exceptions import (ConfigurationError, DegenerateStateError, DomainError,
                                 NonFiniteError, PreconditionError)

logger = logging.getLogger(__name__)

INIT_KINDS = ('bound_state', 'perturbed', 'gaussian')

# Step sizes below this fraction of step_init count as a line-search stall
STALL_FRACTION = 1e-14
MASS_RTOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    beta: float
    p: float
    mass_c: float
    grid: lattice.GridSpec
    max_iter: int = Config.MAX_ITER
    grad_tol: float = Config.GRAD_TOL
    step_init: float = Config.STEP_INIT
    armijo_factor: float = Config.ARMIJO_FACTOR
    armijo_slope: float = Config.ARMIJO_SLOPE
    regauge_period: int = Config.REGAUGE_PERIOD
    q_min_regauge: Optional[float] = None
    seed: int = 0
    freeze_charge: bool = False
    precond_shift: float = Config.PRECOND_SHIFT
    init: str = 'bound_state'
    k_tilde: Optional[float] = None
    gn_samples: int = Config.GN_SAMPLES
    log_every: int = Config.LOG_EVERY

    def __post_init__(self):
        if not self.p > 2:
            raise ConfigurationError('p', 'must exceed 2')
        if not self.mass_c > 0:
            raise ConfigurationError('c', 'must be positive')
        if not self.grad_tol >= 0:
            raise ConfigurationError('grad_tol', 'must be nonnegative')
        if self.max_iter < 0:
            raise ConfigurationError('max_iter', 'must be nonnegative')
        if not self.step_init > 0:
            raise ConfigurationError('step_init', 'must be positive')
        if not 0 < self.armijo_factor < 1:
            raise ConfigurationError('armijo_factor', 'must lie in (0, 1)')
        if not 0 < self.armijo_slope < 1:
            raise ConfigurationError('armijo_slope', 'must lie in (0, 1)')
        if self.regauge_period < 1:
            raise ConfigurationError('regauge_period', 'must be at least 1')
        if self.q_min_regauge is not None and not self.q_min_regauge >= 0:
            raise ConfigurationError('q_min_regauge', 'must be nonnegative')
        if not self.precond_shift > 0:
            raise ConfigurationError('precond_shift', 'must be positive')
        if self.init not in INIT_KINDS:
            raise ConfigurationError('init', f'must be one of {", ".join(INIT_KINDS)}')
        if self.k_tilde is not None and not self.k_tilde > 0:
            raise ConfigurationError('k_tilde', 'must be positive')

    @property
    def q_min(self):
        if self.q_min_regauge is not None:
            return self.q_min_regauge
        return 1e-8 * math.sqrt(self.mass_c)

    def to_dict(self):
        return {
            'alpha': self.alpha,
            'beta': self.beta,
            'p': self.p,
            'c': self.mass_c,
            'L': self.grid.half_width,
            'N': self.grid.points,
            'max_iter': self.max_iter,
            'grad_tol': self.grad_tol,
            'step_init': self.step_init,
            'armijo_factor': self.armijo_factor,
            'armijo_slope': self.armijo_slope,
            'regauge_period': self.regauge_period,
            'q_min_regauge': self.q_min,
            'seed': self.seed,
            'freeze_charge': self.freeze_charge,
            'precond_shift': self.precond_shift,
            'init': self.init,
            'k_tilde': self.k_tilde
        }


@dataclass
class SolveReport:
    final_state: state.PointState
    energy: energy.EnergyBreakdown
    omega: float
    grad_norm: float
    iterations: int
    el_residual_full: float
    el_residual_punctured: float
    boundary_defect: float
    charge_abs: float
    converged: bool
    energy_history: List[float] = field(default_factory=list)
    gate: Optional[bounds.GateDecision] = None
    gauge_refreshes: int = 0
    gauge_refresh_rejections: int = 0
    edge_mass_fraction: float = 0.0
    stalled: bool = False

    @property
    def gauge_lambda(self):
        return self.final_state.gauge_lambda


class ProbeKind(Enum):
    GAUSSIAN = 'gaussian'
    GAUSSIAN_TIMES_X1 = 'gaussian_times_x1'


# Diagnostics

def lagrange_multiplier(s, alpha, beta, p, c):
    """omega = -(H + V1 - V2 - beta C) / c, from <E'(u), u> on the sphere"""
    m = state.mass(s)
    if abs(m - c) > MASS_RTOL * c:
        raise PreconditionError(f'mass {m!r} differs from c = {c!r}')
    parts = energy.total_energy(s, alpha, beta, p)
    return -(parts.h_alpha + parts.v1 - parts.v2 - beta * parts.c_p) / c


def least_squares_multiplier(s, alpha, beta, p):
    """The omega minimizing ||g + (omega/2) m|| in the Euclidean pairing"""
    g_phi, g_q = energy.gradient(s, alpha, beta, p)
    m_phi, m_q = energy.mass_gradient(s)
    gm = _pair(m_phi.values, m_q, g_phi.values, g_q)
    mm = _pair(m_phi.values, m_q, m_phi.values, m_q)
    if not mm > 0:
        raise DegenerateStateError('least-squares multiplier needs positive mass')
    return -2.0 * gm / mm


def _puncture_mask(grid):
    mask = np.ones((grid.points, grid.points), dtype=bool)
    i, j = grid.origin_index
    mask[i - 1:i + 2, j - 1:j + 2] = False
    return mask


def el_residual(s, omega, alpha, beta, p):
    """
    L2 norms of R = -lap phi - q lambda G + omega u - w_u u - beta |u|^(p-2) u,
    over all nodes and without the 3 x 3 block at the origin
    """
    grid = s.grid
    h2 = grid.spacing ** 2
    u = state.values(s)
    residual = (
        -lattice.laplacian(s.phi).values
        - s.charge_q * s.gauge_lambda * s.green_cache.values
        + omega * u
        - energy.nonlinear_density(s, beta, p)
    )
    squared = np.abs(residual) ** 2
    full = math.sqrt(h2 * float(np.sum(squared)))
    punctured = math.sqrt(h2 * float(np.sum(squared[_puncture_mask(grid)])))
    return full, punctured


def boundary_defect(s, alpha):
    """|phi(0) - (alpha + theta_lambda) q| in the state's own gauge"""
    target = (alpha + specfun.theta(s.gauge_lambda)) * s.charge_q
    return abs(complex(s.phi.origin_value) - target)


def verify_dirac(phi_kind, lam, grid, width=1.0):
    """|h^2 sum (-lap phi + lambda phi) G_lambda - phi(0)| for a smooth probe"""
    if not lam > 0:
        raise DomainError('verify_dirac requires lambda > 0')
    kind = ProbeKind(phi_kind)
    x, y = grid.mesh()
    envelope = np.exp(-(x * x + y * y) / width ** 2)
    probe = envelope if kind is ProbeKind.GAUSSIAN else x * envelope
    phi = lattice.Field(grid, probe)
    green = lattice.green_field(grid, lam)
    applied = -lattice.laplacian(phi).values + lam * probe
    return float(abs(lattice.integrate(lattice.Field(grid, applied * green.values)) - phi.origin_value))


# Descent

def _pair(a_phi, a_q, b_phi, b_q):
    """Real pairing Re(sum conj(a) b) over the nodes and the charge"""
    return float(np.vdot(a_phi, b_phi).real) + (np.conj(a_q) * b_q).real


def initial_state(cfg):
    grid = cfg.grid
    x, y = grid.mesh()

    if cfg.freeze_charge or cfg.init == 'gaussian':
        rng = np.random.default_rng(cfg.seed)
        width = rng.uniform(1.0, 2.0)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        phi = lattice.Field(grid, np.exp(-(x * x + y * y) / width ** 2 + 1j * phase))
        return state.normalize(state.assemble(phi, 0.0, 1.0), cfg.mass_c)

    lam = specfun.omega_alpha(cfg.alpha)
    q = math.sqrt(4.0 * math.pi * lam * cfg.mass_c)
    phi = lattice.Field.zeros(grid)
    if cfg.init == 'perturbed':
        rng = np.random.default_rng(cfg.seed)
        amplitude = 0.3 * math.sqrt(cfg.mass_c) * complex(rng.normal(), rng.normal())
        cx, cy = rng.normal(0.0, 1.0, size=2)
        width = rng.uniform(0.5, 2.0)
        bump = amplitude * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / width ** 2)
        phi = lattice.Field(grid, bump)
    return state.normalize(state.assemble(phi, q, lam), cfg.mass_c)


def _direction(s, cfg):
    """Projected preconditioned descent direction, its dual norm and the slope <g, d>"""
    grid = s.grid
    h2 = grid.spacing ** 2
    shift = cfg.precond_shift

    g_phi, g_q = energy.gradient(s, cfg.alpha, cfg.beta, cfg.p)
    m_phi, m_q = energy.mass_gradient(s)
    g_phi, m_phi = g_phi.values, m_phi.values

    pg_phi = lattice.dirichlet_solve(lattice.Field(grid, g_phi / h2), shift).values
    pm_phi = lattice.dirichlet_solve(lattice.Field(grid, m_phi / h2), shift).values
    if cfg.freeze_charge:
        g_q = m_q = pg_q = pm_q = 0j
    else:
        metric_q = (shift + s.gauge_lambda) * state.green_mass(s)
        pg_q = g_q / metric_q
        pm_q = m_q / metric_q

    mu = _pair(m_phi, m_q, pg_phi, pg_q) / _pair(m_phi, m_q, pm_phi, pm_q)
    d_phi = -(pg_phi - mu * pm_phi)
    d_q = -(pg_q - mu * pm_q)

    dual = _pair(g_phi - mu * m_phi, g_q - mu * m_q, -d_phi, -d_q)
    slope = _pair(g_phi, g_q, d_phi, d_q)
    return d_phi, d_q, math.sqrt(max(dual, 0.0)), slope


def _trial(s, d_phi, d_q, t, c):
    candidate = state.with_components(s, s.phi.values + t * d_phi, s.charge_q + t * d_q)
    return state.normalize(candidate, c)


def _refresh_gauge(s, cfg):
    """The state moved to lambda = |q|^2 / c with its energy, or None if lambda is already there"""
    lam_new = abs(s.charge_q) ** 2 / cfg.mass_c
    if abs(lam_new - s.gauge_lambda) <= 1e-12 * s.gauge_lambda:
        return None
    candidate = state.normalize(state.regauge(s, lam_new), cfg.mass_c)
    parts = energy.total_energy(candidate, cfg.alpha, cfg.beta, cfg.p)
    return candidate, parts


def _gate(cfg):
    if cfg.k_tilde is not None:
        decision = bounds.admissible(cfg.alpha, cfg.beta, cfg.p, cfg.mass_c, cfg.k_tilde)
        if not decision.admissible:
            logger.warning(f"Parameters outside the existence region: {decision.detail}")
        return decision
    sample_grid = lattice.make_grid(cfg.grid.half_width, min(cfg.grid.points, Config.GN_POINTS))
    return bounds.gate_for(cfg.alpha, cfg.beta, cfg.p, cfg.mass_c, sample_grid, cfg.gn_samples, cfg.seed)


def solve(cfg):
    """Minimize the energy on the mass sphere from the configured initial state"""
    gate = _gate(cfg)
    c = cfg.mass_c
    s = initial_state(cfg)
    current = energy.total_energy(s, cfg.alpha, cfg.beta, cfg.p)
    history = [current.total]

    logger.debug(
        f"Solve start alpha={cfg.alpha} beta={cfg.beta} p={cfg.p} c={c} {cfg.grid!r} "
        f"init={cfg.init} freeze_charge={cfg.freeze_charge}"
    )

    step = cfg.step_init
    iterations = 0
    accepted = 0
    refreshes = 0
    rejections = 0
    converged = False
    stalled = False
    grad_norm = math.inf

    while True:
        d_phi, d_q, grad_norm, slope = _direction(s, cfg)
        if grad_norm < cfg.grad_tol:
            converged = True
            break
        if iterations >= cfg.max_iter:
            break
        iterations += 1

        t = min(cfg.step_init, step / cfg.armijo_factor)
        # accepted steps never raise the energy
        slope = min(slope, 0.0)
        while True:
            if t < STALL_FRACTION * cfg.step_init:
                stalled = True
                break
            try:
                trial = _trial(s, d_phi, d_q, t, c)
            except DegenerateStateError:
                t *= cfg.armijo_factor
                continue
            parts = energy.total_energy(trial, cfg.alpha, cfg.beta, cfg.p)
            if parts.total <= current.total + cfg.armijo_slope * t * slope:
                break
            t *= cfg.armijo_factor

        if stalled:
            logger.warning(f"Line search stalled at iteration {iterations} (grad_norm={grad_norm:.3e})")
            break

        s, current, step = trial, parts, t
        accepted += 1
        history.append(current.total)

        if accepted % cfg.log_every == 0:
            logger.debug(
                f"iter {iterations}: E={current.total:.12g} grad_norm={grad_norm:.3e} "
                f"step={step:.3e} |q|={abs(s.charge_q):.6g} lambda={s.gauge_lambda:.6g}"
            )

        if (not cfg.freeze_charge and accepted % cfg.regauge_period == 0
                and abs(s.charge_q) >= cfg.q_min):
            refreshed = _refresh_gauge(s, cfg)
            if refreshed is not None and refreshed[1].total <= current.total:
                s, current = refreshed
                refreshes += 1
                history.append(current.total)
            elif refreshed is not None:
                rejections += 1
                logger.debug(
                    f"Gauge refresh to lambda={refreshed[0].gauge_lambda:.6g} rejected: "
                    f"energy {refreshed[1].total:.12g} > {current.total:.12g}"
                )

    if not math.isfinite(grad_norm):
        raise NonFiniteError(f'gradient norm is not finite after {iterations} iterations')

    omega = lagrange_multiplier(s, cfg.alpha, cfg.beta, cfg.p, c)
    full, punctured = el_residual(s, omega, cfg.alpha, cfg.beta, cfg.p)
    report = SolveReport(
        final_state=s,
        energy=current,
        omega=omega,
        grad_norm=grad_norm,
        iterations=iterations,
        el_residual_full=full,
        el_residual_punctured=punctured,
        boundary_defect=boundary_defect(s, cfg.alpha),
        charge_abs=abs(s.charge_q),
        converged=converged,
        energy_history=history,
        gate=gate,
        gauge_refreshes=refreshes,
        gauge_refresh_rejections=rejections,
        edge_mass_fraction=state.edge_mass_fraction(s),
        stalled=stalled
    )

    status = 'converged' if converged else 'not converged'
    logger.info(
        f"Solve {status} after {iterations} iterations: E={current.total:.12g} omega={omega:.9g} "
        f"|q|={report.charge_abs:.6g} grad_norm={grad_norm:.3e}"
        f" gauge refreshes {refreshes} accepted, {rejections} rejected"
    )
    return report


def solve_baseline(cfg):
    """Same problem with the charge pinned to zero"""
    return solve(replace(cfg, freeze_charge=True))


def multistart(cfg, seeds):
    """Free-mode solves from seeded perturbations of the bound state"""
    reports = [solve(replace(cfg, init='perturbed', seed=seed, freeze_charge=False)) for seed in seeds]
    energies = [r.energy.total for r in reports]
    if energies:
        logger.info(f"Multistart over {len(energies)} seeds: energy spread {max(energies) - min(energies):.3e}")
    return reports


def refine(cfg, ladder):
    """Repeat a solve along a grid ladder at fixed L"""
    return [solve(replace(cfg, grid=lattice.make_grid(cfg.grid.half_width, n))) for n in ladder]
