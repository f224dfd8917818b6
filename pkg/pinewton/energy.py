"""
Discrete energy functional E = H/2 + (V1 - V2)/4 - (beta/p) C and its gradient.

Gradients are raw partial derivatives packed as complex numbers,
d/dRe z + i d/dIm z, with respect to every node of phi and to q. With this
convention the first-order change of E along (dphi, dq) is
Re(sum conj(g_phi) dphi + conj(g_q) dq).
"""
import logging
from dataclasses import dataclass

import numpy as np

from pinewton import lattice, specfun, state
from pinewton.exceptions import DomainError, NonFiniteError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Components of the discrete energy"""
    h_alpha: float
    v1: float
    v2: float
    c_p: float
    total: float

    def to_dict(self):
        return {
            'h_alpha': self.h_alpha,
            'v1': self.v1,
            'v2': self.v2,
            'c_p': self.c_p,
            'total': self.total
        }


def _check_exponent(p):
    if not p > 2:
        raise DomainError('nonlinearity exponent p must exceed 2')


def h_alpha(s, alpha):
    """
    Quadratic form of the point-interaction Laplacian:
    ||grad phi||^2 - 2 lambda Re(q <phi, G>) - lambda |q|^2 ||G||^2 + (alpha + theta_lambda) |q|^2
    """
    lam = s.gauge_lambda
    q = s.charge_q
    kinetic = lattice.dirichlet_energy(s.phi)
    coupling = 2.0 * lam * (q * state.pairing(s)).real
    charged = abs(q) ** 2 * (alpha + specfun.theta(lam) - lam * state.green_mass(s))
    return kinetic - coupling + charged


def _potentials(s):
    """u, |u|^2 and the two log-kernel potentials W1 = log(1+r) * |u|^2, W2 = log(1+1/r) * |u|^2"""
    u = state.values(s)
    density = lattice.Field(s.grid, np.abs(u) ** 2)
    w1 = lattice.log_convolve(density, lattice.KernelKind.LOG1P_R).values
    w2 = lattice.log_convolve(density, lattice.KernelKind.LOG1P_INV_R).values
    return u, density.values, w1, w2


def v_split(s):
    """(V1, V2) with V_i = h^2 * sum W_i |u|^2"""
    _, density, w1, w2 = _potentials(s)
    h2 = s.grid.spacing ** 2
    return h2 * float(np.sum(w1 * density)), h2 * float(np.sum(w2 * density))


def c_p(s, p):
    """h^2 * sum |u|^p"""
    _check_exponent(p)
    return s.grid.spacing ** 2 * float(np.sum(np.abs(state.values(s)) ** p))


def potential_w(s):
    """Log potential w_u = W2 - W1, i.e. -(log r) * |u|^2"""
    _, _, w1, w2 = _potentials(s)
    return lattice.Field(s.grid, w2 - w1)


def total_energy(s, alpha, beta, p):
    _check_exponent(p)
    u, density, w1, w2 = _potentials(s)
    h2 = s.grid.spacing ** 2

    quadratic = h_alpha(s, alpha)
    v1 = h2 * float(np.sum(w1 * density))
    v2 = h2 * float(np.sum(w2 * density))
    power = h2 * float(np.sum(np.abs(u) ** p))
    total = 0.5 * quadratic + 0.25 * (v1 - v2) - (beta / p) * power

    if not np.isfinite(total):
        raise NonFiniteError(f'energy is not finite (H={quadratic}, V1={v1}, V2={v2}, C={power})')
    return EnergyBreakdown(h_alpha=quadratic, v1=v1, v2=v2, c_p=power, total=total)


def nonlinear_density(s, beta, p):
    """Pointwise w_u u + beta |u|^(p-2) u, the nonlinear part of the Euler-Lagrange operator"""
    _check_exponent(p)
    u, _, w1, w2 = _potentials(s)
    return (w2 - w1) * u + beta * np.abs(u) ** (p - 2) * u


def gradient(s, alpha, beta, p):
    """Raw gradient (g_phi, g_q) of total_energy"""
    grid = s.grid
    h2 = grid.spacing ** 2
    lam = s.gauge_lambda
    q = s.charge_q
    green = s.green_cache.values
    phi = s.phi.values

    g_u = -h2 * nonlinear_density(s, beta, p)
    lap = lattice.laplacian(s.phi).values
    g_phi = h2 * (-lap - lam * q * green) + g_u

    g_q = (
        -lam * h2 * complex(np.sum(phi * green))
        + (alpha + specfun.theta(lam) - lam * state.green_mass(s)) * q
        + complex(np.sum(green * g_u))
    )
    return lattice.Field(grid, g_phi), g_q


def mass_gradient(s):
    """Raw gradient of the discrete mass: (2 h^2 u, 2 h^2 sum G u)"""
    h2 = s.grid.spacing ** 2
    u = state.values(s)
    return lattice.Field(s.grid, 2.0 * h2 * u), 2.0 * h2 * complex(np.sum(s.green_cache.values * u))
