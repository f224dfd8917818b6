"""
Energy-space states u = phi + q * G_lambda.

The charge q is fixed by u; the gauge lambda is free and changing it only moves
the regular part phi. States are immutable: every operation returns a new one.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from pinewton import lattice
from pinewton.exceptions import DegenerateStateError, DomainError, GaugeUndefinedError

logger = logging.getLogger(__name__)

# Fixed-point iterations used to make lambda = |q|^2 / mass self-consistent
_CONVENIENT_GAUGE_ITERATIONS = 20
_CONVENIENT_GAUGE_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class PointState:
    """The triple (phi, q, lambda) together with G_lambda sampled on the grid"""
    phi: lattice.Field
    charge_q: complex
    gauge_lambda: float
    green_cache: lattice.Field

    @property
    def grid(self):
        return self.phi.grid

    def __repr__(self):
        return f'<PointState q={self.charge_q:.6g} lambda={self.gauge_lambda:.6g} {self.grid!r}>'


def assemble(phi, q, lam):
    """Build the state representing phi + q * G_lambda"""
    if not lam > 0:
        raise DomainError('gauge lambda must be positive')
    values = np.asarray(phi.values, dtype=complex)
    return PointState(
        phi=lattice.Field(phi.grid, values),
        charge_q=complex(q),
        gauge_lambda=float(lam),
        green_cache=lattice.green_field(phi.grid, lam)
    )


def with_components(s, phi_values, q):
    """Same gauge and Green field, new regular part and charge"""
    return PointState(
        phi=lattice.Field(s.grid, np.asarray(phi_values, dtype=complex)),
        charge_q=complex(q),
        gauge_lambda=s.gauge_lambda,
        green_cache=s.green_cache
    )


def values(s):
    """The represented function u at the nodes"""
    return s.phi.values + s.charge_q * s.green_cache.values


def represented_field(s):
    return lattice.Field(s.grid, values(s))


def green_mass(s):
    """Discrete ||G_lambda||^2"""
    return s.grid.spacing ** 2 * float(np.sum(s.green_cache.values ** 2))


def pairing(s):
    """Discrete <phi, G_lambda> = h^2 * sum conj(phi) G_lambda"""
    return s.grid.spacing ** 2 * complex(np.sum(np.conj(s.phi.values) * s.green_cache.values))


def mass(s):
    """Discrete ||u||^2 with the charged part expanded"""
    h2 = s.grid.spacing ** 2
    q = s.charge_q
    phi_mass = h2 * float(np.sum(np.abs(s.phi.values) ** 2))
    total = phi_mass + 2.0 * (q * pairing(s)).real + abs(q) ** 2 * green_mass(s)
    return max(total, 0.0)


def regauge(s, lam_new):
    """
    Move to gauge lam_new: phi' = phi + q (G_lambda - G_lambda'), charge unchanged.
    The difference kernel takes its analytic limit log(lambda'/lambda)/(4 pi) at the origin.
    """
    if not lam_new > 0:
        raise DomainError('gauge lambda must be positive')
    lam_new = float(lam_new)
    if lam_new == s.gauge_lambda:
        return s

    new_green = lattice.green_field(s.grid, lam_new)
    q = s.charge_q
    if q == 0:
        return PointState(s.phi, q, lam_new, new_green)

    difference = s.green_cache.values - new_green.values
    difference[s.grid.origin_index] = math.log(lam_new / s.gauge_lambda) / (4.0 * math.pi)
    phi = lattice.Field(s.grid, s.phi.values + q * difference)
    return PointState(phi, q, lam_new, new_green)


def convenient_gauge(s):
    """Regauge to lambda = |q|^2 / ||u||^2"""
    q = s.charge_q
    if q == 0:
        raise GaugeUndefinedError('convenient gauge needs a nonzero charge')
    m = mass(s)
    if not m > 0:
        raise DegenerateStateError('convenient gauge needs positive mass')

    # The origin node of u moves by O(h^2) under a gauge change, so iterate
    # lambda = |q|^2 / mass(regauge(s, lambda)) to a fixed point.
    lam = abs(q) ** 2 / m
    result = regauge(s, lam)
    for _ in range(_CONVENIENT_GAUGE_ITERATIONS):
        lam_next = abs(q) ** 2 / mass(result)
        if abs(lam_next - lam) <= _CONVENIENT_GAUGE_RTOL * lam:
            break
        lam = lam_next
        result = regauge(s, lam)
    return result


def normalize(s, c):
    """Scale phi and q jointly so that the discrete mass equals c"""
    m = mass(s)
    if not m > 0:
        raise DegenerateStateError('cannot normalize a state with zero mass')
    scale = math.sqrt(c / m)
    return with_components(s, s.phi.values * scale, s.charge_q * scale)


def edge_mass_fraction(s, band=0.1):
    """Share of the mass carried by nodes within `band` * L of the box edge"""
    grid = s.grid
    x, y = grid.mesh()
    edge = np.maximum(np.abs(x), np.abs(y)) >= (1.0 - band) * grid.half_width
    density = np.abs(values(s)) ** 2
    total = float(np.sum(density))
    if total == 0:
        return 0.0
    return float(np.sum(density[edge])) / total
