"""
Identity suite run by `verify`: each check compares a discrete quantity
against a closed-form or brute-force reference and returns a CheckResult.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from pinewton import bounds, energy, lattice, specfun, state
from pinewton.solver import ProbeKind, verify_dirac

logger = logging.getLogger(__name__)

DIRAC_TOL = 5e-3
GREEN_MASS_RTOL = 1e-2
BOUND_STATE_RTOL = 1e-2
GRADIENT_RTOL = 1e-6
CONVOLUTION_ATOL = 1e-12

GRADIENT_POINTS = 32
GRADIENT_HALF_WIDTH = 6.0
GRADIENT_STATES = 10
GRADIENT_STEP = 1e-5
GRADIENT_PARAMETERS = (0.2, 0.5, 3.0)

CONVOLUTION_POINTS = 16
CONVOLUTION_SEEDS = 5


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ''

    def __post_init__(self):
        # numpy scalars are not JSON serializable
        object.__setattr__(self, 'passed', bool(self.passed))
        object.__setattr__(self, 'value', float(self.value))
        object.__setattr__(self, 'threshold', float(self.threshold))

    def to_dict(self):
        return {
            'name': self.name,
            'passed': self.passed,
            'value': self.value,
            'threshold': self.threshold,
            'detail': self.detail
        }


def check_dirac(grid):
    worst = max(verify_dirac(ProbeKind.GAUSSIAN, 1.0, grid),
                verify_dirac(ProbeKind.GAUSSIAN, 4.0, grid),
                verify_dirac(ProbeKind.GAUSSIAN_TIMES_X1, 1.0, grid))
    return CheckResult('dirac_identity', worst < DIRAC_TOL, worst, DIRAC_TOL,
                       'max defect over GAUSSIAN(1) at lambda 1 and 4, GAUSSIAN_TIMES_X1 at lambda 1')


def check_green_mass(grid):
    green = lattice.green_field(grid, 1.0).values
    discrete = grid.spacing ** 2 * float(np.sum(green ** 2))
    exact = 1.0 / (4.0 * math.pi)
    error = abs(discrete - exact) / exact
    return CheckResult('green_mass', error < GREEN_MASS_RTOL, error, GREEN_MASS_RTOL,
                       f'||G_1||^2 = {discrete:.9g}, exact {exact:.9g}')


def check_bound_state_energy(points, alphas=(-0.5, 0.0, 0.5)):
    """H(phi=0, q=1, lambda=omega_alpha) against -1/(4 pi) on a box of half-width 10/sqrt(omega_alpha)"""
    exact = -1.0 / (4.0 * math.pi)
    worst = 0.0
    for alpha in alphas:
        lam = specfun.omega_alpha(alpha)
        grid = lattice.make_grid(10.0 / math.sqrt(lam), points)
        s = state.assemble(lattice.Field.zeros(grid), 1.0, lam)
        worst = max(worst, abs(energy.h_alpha(s, alpha) - exact) / abs(exact))
    return CheckResult('bound_state_energy', worst < BOUND_STATE_RTOL, worst, BOUND_STATE_RTOL,
                       f'max relative error over alpha in {list(alphas)}')


def _reference_state(grid):
    x, y = grid.mesh()
    phi = lattice.Field(grid, 0.5 * np.exp(-(x * x + y * y)) * (1.0 + 0.25j * x))
    return state.assemble(phi, 1.0, 1.0)


def gauge_defects(half_width, ladder, alpha=0.0):
    """|H at gauge 2 lambda - H at gauge lambda| for the reference state along a grid ladder"""
    defects = []
    for n in ladder:
        s = _reference_state(lattice.make_grid(half_width, n))
        moved = state.regauge(s, 2.0 * s.gauge_lambda)
        defects.append(abs(energy.h_alpha(moved, alpha) - energy.h_alpha(s, alpha)))
    return defects


def check_gauge_invariance(half_width, points):
    ladder = [n for n in (points // 4, points // 2, points) if n >= 8 and n % 2 == 0]
    defects = gauge_defects(half_width, ladder)
    decreasing = all(b < a for a, b in zip(defects, defects[1:]))
    return CheckResult('gauge_invariance', decreasing, defects[-1], defects[0],
                       f'defects along N = {ladder}: ' + ', '.join(f'{d:.3e}' for d in defects))


def gradient_error(s, alpha, beta, p, step=GRADIENT_STEP):
    """Max relative mismatch between the analytic gradient and central differences"""
    g_phi, g_q = energy.gradient(s, alpha, beta, p)
    phi = s.phi.values
    q = s.charge_q

    def value(phi_values, charge):
        return energy.total_energy(state.with_components(s, phi_values, charge), alpha, beta, p).total

    numeric = np.zeros_like(phi)
    for index in np.ndindex(phi.shape):
        parts = []
        for unit in (1.0, 1j):
            plus = phi.copy()
            minus = phi.copy()
            plus[index] += unit * step
            minus[index] -= unit * step
            parts.append((value(plus, q) - value(minus, q)) / (2.0 * step))
        numeric[index] = parts[0] + 1j * parts[1]
    numeric_q = ((value(phi, q + step) - value(phi, q - step))
                 + 1j * (value(phi, q + 1j * step) - value(phi, q - 1j * step))) / (2.0 * step)

    scale = max(float(np.max(np.abs(g_phi.values))), abs(g_q))
    mismatch = max(float(np.max(np.abs(numeric - g_phi.values))), abs(numeric_q - g_q))
    return mismatch / scale


def check_gradient(states=GRADIENT_STATES):
    grid = lattice.make_grid(GRADIENT_HALF_WIDTH, GRADIENT_POINTS)
    alpha, beta, p = GRADIENT_PARAMETERS
    worst = 0.0
    for sequence in np.random.SeedSequence(0).spawn(states):
        s = bounds.random_state(grid, np.random.default_rng(sequence))
        worst = max(worst, gradient_error(s, alpha, beta, p))
    return CheckResult('gradient', worst < GRADIENT_RTOL, worst, GRADIENT_RTOL,
                       f'{states} random states at N = {GRADIENT_POINTS}')


def brute_force_convolution(density, kind):
    """O(N^4) reference for lattice.log_convolve"""
    grid = density.grid
    h = grid.spacing
    n = grid.points
    origin = lattice.kernel_origin_value(grid, kind)
    profile = np.log1p if lattice.KernelKind(kind) is lattice.KernelKind.LOG1P_R else (lambda r: np.log1p(1.0 / r))
    offsets = np.arange(-(n - 1), n) * h
    radii = np.hypot(offsets[:, None], offsets[None, :])
    table = np.full(radii.shape, origin)
    table[radii > 0] = profile(radii[radii > 0])

    out = np.zeros((n, n))
    values = np.real(density.values)
    for i in range(n):
        for j in range(n):
            out[i, j] = np.sum(table[i - np.arange(n)[:, None] + n - 1, j - np.arange(n)[None, :] + n - 1] * values)
    return h * h * out


def check_convolution():
    grid = lattice.make_grid(4.0, CONVOLUTION_POINTS)
    worst = 0.0
    for seed in range(CONVOLUTION_SEEDS):
        rng = np.random.default_rng(seed)
        density = lattice.Field(grid, rng.uniform(0.0, 1.0, (grid.points, grid.points)))
        for kind in lattice.KernelKind:
            spectral = lattice.log_convolve(density, kind).values
            worst = max(worst, float(np.max(np.abs(spectral - brute_force_convolution(density, kind)))))
    return CheckResult('convolution', worst < CONVOLUTION_ATOL, worst, CONVOLUTION_ATOL,
                       f'{CONVOLUTION_SEEDS} densities at N = {CONVOLUTION_POINTS}, both kernels')


def run_identity_suite(grid):
    """Run every check at the given resolution; cheap checks use their own grids"""
    results = [
        check_dirac(grid),
        check_green_mass(grid),
        check_bound_state_energy(grid.points),
        check_gauge_invariance(grid.half_width, grid.points),
        check_gradient(),
        check_convolution()
    ]
    for result in results:
        mark = '✓' if result.passed else '✗'
        logger.info(f"{mark} {result.name}: {result.value:.3e} (threshold {result.threshold:.3e}) {result.detail}")
    return results
