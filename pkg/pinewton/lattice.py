"""
Truncated computational domain and discrete calculus on it.

The box [-L, L)^2 carries N x N nodes at (i - N/2) h, so the origin is a node.
Every integral is the rectangle rule h^2 * sum, the Laplacian is the 5-point
stencil with zero values outside the box, and convolutions are linear (not
circular) through zero padding to at least 2N - 1 points per axis.
"""
import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import fft as sp_fft
from scipy.integrate import dblquad, quad

from pinewton import specfun
from pinewton.exceptions import ConfigurationError, DomainError, NonFiniteError

logger = logging.getLogger(__name__)

_fft_workers = 1

# Quadrature tolerances for the singular origin cell
GREEN_CELL_RTOL = 1e-8
KERNEL_CELL_RTOL = 1e-10


def set_fft_workers(workers):
    """Cap the number of threads scipy.fft may use"""
    global _fft_workers
    _fft_workers = max(1, int(workers))
    logger.debug(f"FFT workers set to {_fft_workers}")


class KernelKind(Enum):
    """The two pieces of the logarithmic kernel, log r = log(1+r) - log(1+1/r)"""
    LOG1P_R = 'log1p_r'
    LOG1P_INV_R = 'log1p_inv_r'


@dataclass(frozen=True)
class GridSpec:
    """Square grid on [-L, L)^2 with N nodes per axis"""
    half_width: float
    points: int

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.points

    @property
    def origin_index(self):
        return (self.points // 2, self.points // 2)

    @property
    def axis(self):
        return (np.arange(self.points) - self.points // 2) * self.spacing

    def mesh(self):
        """Node coordinates (X, Y), indexed [i, j]"""
        return np.meshgrid(self.axis, self.axis, indexing='ij')

    def radius(self):
        x, y = self.mesh()
        return np.hypot(x, y)

    def __repr__(self):
        return f'<GridSpec L={self.half_width} N={self.points} h={self.spacing:.6g}>'


def make_grid(half_width, points):
    """Build a grid, checking N even and at least 8 and L positive"""
    if isinstance(points, bool) or int(points) != points:
        raise ConfigurationError('N', 'must be an integer')
    points = int(points)
    if points < 8 or points % 2:
        raise ConfigurationError('N', 'must be an even integer of at least 8')
    if not half_width > 0 or not math.isfinite(half_width):
        raise ConfigurationError('L', 'must be a positive number')
    return GridSpec(float(half_width), points)


@dataclass(frozen=True, eq=False)
class Field:
    """Function values at the nodes of a grid"""
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        shape = (self.grid.points, self.grid.points)
        if values.shape != shape:
            raise DomainError(f'field shape {values.shape} does not match grid {shape}')
        if not np.all(np.isfinite(values)):
            raise NonFiniteError('field contains NaN or Inf')
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, grid, dtype=complex):
        return cls(grid, np.zeros((grid.points, grid.points), dtype=dtype))

    @classmethod
    def from_function(cls, grid, func):
        """Sample func(x, y) at the nodes"""
        x, y = grid.mesh()
        return cls(grid, np.asarray(func(x, y)))

    @property
    def origin_value(self):
        return self.values[self.grid.origin_index]

    def __repr__(self):
        return f'<Field {self.grid!r} dtype={self.values.dtype}>'


def integrate(f):
    """Rectangle rule h^2 * sum over all nodes"""
    total = f.grid.spacing ** 2 * np.sum(f.values)
    if np.iscomplexobj(total):
        return complex(total)
    return float(total)


def laplacian(f):
    """5-point Laplacian with zero extension outside the box"""
    v = f.values
    padded = np.pad(v, 1)
    lap = (padded[2:, 1:-1] + padded[:-2, 1:-1] + padded[1:-1, 2:] + padded[1:-1, :-2] - 4.0 * v)
    return Field(f.grid, lap / f.grid.spacing ** 2)


def dirichlet_energy(f):
    """
    Squared forward-difference gradient norm h^2 * sum |D f|^2, including the
    edges that leave the box. Its adjoint is the 5-point Laplacian above:
    dirichlet_energy(f) = Re h^2 * sum conj(f) * (-laplacian(f)).
    """
    padded = np.pad(f.values, 1)
    dx = np.diff(padded[:, 1:-1], axis=0)
    dy = np.diff(padded[1:-1, :], axis=1)
    return float(np.sum(np.abs(dx) ** 2) + np.sum(np.abs(dy) ** 2))


def dirichlet_solve(f, shift):
    """
    Apply (-laplacian + shift)^-1 exactly. The type-I sine transform
    diagonalizes the zero-extension 5-point Laplacian on the box.
    """
    if shift < 0:
        raise DomainError('dirichlet_solve requires shift >= 0')
    grid = f.grid
    n = grid.points
    modes = np.arange(1, n + 1)
    eig = (4.0 / grid.spacing ** 2) * np.sin(math.pi * modes / (2.0 * (n + 1))) ** 2
    denom = eig[:, None] + eig[None, :] + shift

    def _apply(real):
        spectrum = sp_fft.dstn(real, type=1, workers=_fft_workers)
        return sp_fft.idstn(spectrum / denom, type=1, workers=_fft_workers)

    v = f.values
    if np.iscomplexobj(v):
        return Field(grid, _apply(v.real) + 1j * _apply(v.imag))
    return Field(grid, _apply(v))


def _padded_length(points):
    return sp_fft.next_fast_len(2 * points - 1, real=True)


def _difference_radii(grid):
    """Radii |x - y| laid out circularly on the padded (M x M) array"""
    m = _padded_length(grid.points)
    offsets = np.arange(m)
    offsets = np.where(offsets < grid.points, offsets, offsets - m) * grid.spacing
    return np.hypot(offsets[:, None], offsets[None, :])


def _kernel_spectrum(grid, profile, origin_value):
    radii = _difference_radii(grid)
    table = np.empty_like(radii)
    off_origin = radii > 0
    table[off_origin] = profile(radii[off_origin])
    table[0, 0] = origin_value
    return sp_fft.rfft2(table, workers=_fft_workers)


def _log1p_inv_r_cell_average(spacing):
    """(1/h^2) * integral of log(1 + 1/|z|) over the cell [-h/2, h/2]^2"""
    a = 0.5 * spacing

    def radial_primitive(r):
        # integral_0^r s log(1 + 1/s) ds
        return 0.5 * (r * r - 1.0) * math.log1p(r) + 0.5 * r - 0.5 * r * r * math.log(r)

    # eight congruent triangles 0 <= theta <= pi/4, 0 <= r <= a / cos(theta)
    value, _ = quad(lambda t: radial_primitive(a / math.cos(t)), 0.0, math.pi / 4,
                    epsabs=0.0, epsrel=KERNEL_CELL_RTOL)
    return 8.0 * value / spacing ** 2


def _log_profile(kind):
    if kind is KernelKind.LOG1P_R:
        return np.log1p
    return lambda r: np.log1p(1.0 / r)


@functools.lru_cache(maxsize=16)
def _log_kernel_spectrum(grid, kind):
    spectrum = _kernel_spectrum(grid, _log_profile(kind), kernel_origin_value(grid, kind))
    spectrum.setflags(write=False)
    logger.debug(f"Tabulated {kind.value} kernel on {grid!r}")
    return spectrum


def _convolve(density, spectrum):
    values = density.values
    if np.iscomplexobj(values):
        if np.any(values.imag != 0):
            raise DomainError('convolution density must be real')
        values = values.real
    grid = density.grid
    m = spectrum.shape[0]
    transformed = sp_fft.rfft2(values, s=(m, m), workers=_fft_workers)
    out = sp_fft.irfft2(transformed * spectrum, s=(m, m), workers=_fft_workers)
    n = grid.points
    return Field(grid, grid.spacing ** 2 * out[:n, :n])


def log_convolve(density, kind):
    """h^2 * sum_y K(x - y) density(y) for K = log(1 + r) or log(1 + 1/r)"""
    return _convolve(density, _log_kernel_spectrum(density.grid, KernelKind(kind)))


@functools.lru_cache(maxsize=16)
def _radial_kernel_spectrum(grid, profile, origin_value):
    spectrum = _kernel_spectrum(grid, profile, origin_value)
    spectrum.setflags(write=False)
    return spectrum


def radial_convolve(density, profile, origin_value):
    """
    Linear convolution with an arbitrary radial kernel profile(r), r > 0.
    Tabulations are cached per (grid, profile, origin_value), so pass a
    module-level function rather than a fresh lambda.
    """
    return _convolve(density, _radial_kernel_spectrum(density.grid, profile, float(origin_value)))


def kernel_origin_value(grid, kind):
    """Value the tabulated log kernel takes at zero separation"""
    if KernelKind(kind) is KernelKind.LOG1P_R:
        return 0.0
    return _log1p_inv_r_cell_average(grid.spacing)


def _green_cell_average(spacing, lam):
    """(1/h^2) * integral of G_lambda over the origin cell"""
    a = 0.5 * spacing
    k = math.sqrt(lam)

    def integrand(r, t):
        if r <= 0.0:
            return 0.0
        return r * specfun.bessel_k0(k * r)

    value, _ = dblquad(integrand, 0.0, math.pi / 4, 0.0, lambda t: a / math.cos(t),
                       epsabs=0.0, epsrel=GREEN_CELL_RTOL)
    return 8.0 * value / (2.0 * math.pi * spacing ** 2)


@functools.lru_cache(maxsize=32)
def _green_values(grid, lam):
    radii = grid.radius()
    values = np.empty_like(radii)
    off_origin = radii > 0
    values[off_origin] = specfun.green_value(lam, radii[off_origin])
    values[grid.origin_index] = _green_cell_average(grid.spacing, lam)
    values.setflags(write=False)
    return values


def green_field(grid, lam):
    """G_lambda at the nodes; the origin node holds the one-cell average"""
    if not lam > 0:
        raise DomainError('green_field requires lambda > 0')
    return Field(grid, _green_values(grid, float(lam)))
