import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pinewton import bounds, checks, energy, lattice, specfun, state
from pinewton.exceptions import DomainError

PARAMETERS = [(0.2, 0.5, 3.0), (-0.4, -1.0, 4.0), (0.0, 2.0, 5.5)]


def scaled(s, t):
    return state.with_components(s, t * s.phi.values, t * s.charge_q)


def inner(g, s):
    g_phi, g_q = g
    return (np.sum(np.conj(g_phi.values) * s.phi.values) + np.conj(g_q) * s.charge_q).real


@pytest.mark.parametrize('alpha, beta, p', PARAMETERS)
def test_total_is_sum_of_parts(charged_state, alpha, beta, p):
    parts = energy.total_energy(charged_state, alpha, beta, p)
    v1, v2 = energy.v_split(charged_state)
    assert_allclose(parts.h_alpha, energy.h_alpha(charged_state, alpha), rtol=1e-14)
    assert_allclose((parts.v1, parts.v2), (v1, v2), rtol=1e-14)
    assert_allclose(parts.c_p, energy.c_p(charged_state, p), rtol=1e-14)
    expected = parts.h_alpha / 2 + (parts.v1 - parts.v2) / 4 - beta / p * parts.c_p
    assert_allclose(parts.total, expected, rtol=1e-14)
    assert set(parts.to_dict()) == {'h_alpha', 'v1', 'v2', 'c_p', 'total'}


def test_potential_energies_nonnegative_and_quartic(random_states):
    for s in random_states:
        v1, v2 = energy.v_split(s)
        assert v1 >= 0 and v2 >= 0
        v1_double, v2_double = energy.v_split(scaled(s, 2.0))
        assert_allclose((v1_double, v2_double), (16 * v1, 16 * v2), rtol=1e-12)


def test_zero_state_has_zero_energy(grid):
    s = state.assemble(lattice.Field.zeros(grid), 0.0, 1.0)
    parts = energy.total_energy(s, 0.3, 1.0, 3.0)
    assert parts.to_dict() == {'h_alpha': 0.0, 'v1': 0.0, 'v2': 0.0, 'c_p': 0.0, 'total': 0.0}
    g_phi, g_q = energy.gradient(s, 0.3, 1.0, 3.0)
    assert_array_equal(g_phi.values, 0)
    assert g_q == 0


def test_h_alpha_gaussian():
    # forward differences lose (h^2/4) * pi on this Gaussian
    grid = lattice.make_grid(12, 256)
    phi = lattice.Field.from_function(grid, lambda x, y: np.exp(-(x * x + y * y)))
    s = state.assemble(phi, 0.0, 1.0)
    assert_allclose(energy.h_alpha(s, 5.0), math.pi, rtol=3e-3)


def test_h_alpha_bound_state():
    assert checks.check_bound_state_energy(256).passed


def test_h_alpha_gauge_defect_shrinks():
    defects = checks.gauge_defects(12.0, (64, 128, 256))
    assert defects[0] > defects[1] > defects[2]


def test_c_p_gaussian_and_scaling(charged_state):
    grid = lattice.make_grid(12, 256)
    phi = lattice.Field.from_function(grid, lambda x, y: np.exp(-(x * x + y * y)))
    assert_allclose(energy.c_p(state.assemble(phi, 0.0, 1.0), 4.0), math.pi / 4, rtol=1e-6)
    for p in (2.5, 3.0, 6.0):
        assert_allclose(energy.c_p(scaled(charged_state, 1.3), p), 1.3 ** p * energy.c_p(charged_state, p), rtol=1e-12)


@pytest.mark.parametrize('p', [2.0, 1.5])
def test_exponent_must_exceed_two(charged_state, p):
    with pytest.raises(DomainError):
        energy.c_p(charged_state, p)
    with pytest.raises(DomainError):
        energy.total_energy(charged_state, 0.0, 1.0, p)
    with pytest.raises(DomainError):
        energy.gradient(charged_state, 0.0, 1.0, p)


def test_potential_w_of_point_mass_is_minus_log(grid):
    values = np.zeros((grid.points, grid.points))
    values[grid.origin_index] = 1.0 / grid.spacing
    s = state.assemble(lattice.Field(grid, values), 0.0, 1.0)
    w = energy.potential_w(s).values
    r = grid.radius()
    mask = r > 0
    assert_allclose(w[mask], -np.log(r[mask]), rtol=0, atol=1e-12)


def test_potential_w_pairs_to_potential_energies(charged_state):
    w = energy.potential_w(charged_state).values
    density = np.abs(state.values(charged_state)) ** 2
    v1, v2 = energy.v_split(charged_state)
    assert_allclose(charged_state.grid.spacing ** 2 * np.sum(w * density), v2 - v1, rtol=1e-12)


def test_energy_is_phase_invariant(charged_state):
    rotation = cmath.exp(0.83j)
    rotated = scaled(charged_state, rotation)
    for alpha, beta, p in PARAMETERS:
        assert_allclose(energy.total_energy(rotated, alpha, beta, p).total,
                        energy.total_energy(charged_state, alpha, beta, p).total, rtol=1e-12)


@pytest.mark.parametrize('alpha, beta, p', PARAMETERS)
def test_gradient_matches_central_differences(random_states, alpha, beta, p):
    for s in random_states:
        assert checks.gradient_error(s, alpha, beta, p) < 1e-6


def test_gradient_charge_component_without_regular_part(grid):
    s = state.assemble(lattice.Field.zeros(grid), 0.9 + 0.4j, 1.0)
    alpha, beta, p = 0.2, 0.0, 3.0
    _, g_q = energy.gradient(s, alpha, beta, p)
    h2 = grid.spacing ** 2
    green = s.green_cache.values
    nonlinear = energy.nonlinear_density(s, beta, p)
    expected = (alpha + specfun.theta(1.0) - state.green_mass(s)) * s.charge_q - h2 * np.sum(green * nonlinear)
    assert_allclose(g_q, expected, rtol=1e-12)


@pytest.mark.parametrize('alpha, beta, p', PARAMETERS)
def test_gradient_euler_homogeneity(charged_state, alpha, beta, p):
    parts = energy.total_energy(charged_state, alpha, beta, p)
    expected = parts.h_alpha + parts.v1 - parts.v2 - beta * parts.c_p
    assert_allclose(inner(energy.gradient(charged_state, alpha, beta, p), charged_state), expected, rtol=1e-10)


def test_gradient_is_phase_equivariant(charged_state):
    rotation = cmath.exp(-1.1j)
    g_phi, g_q = energy.gradient(charged_state, 0.2, 0.5, 3.0)
    r_phi, r_q = energy.gradient(scaled(charged_state, rotation), 0.2, 0.5, 3.0)
    scale = np.max(np.abs(g_phi.values))
    assert_allclose(r_phi.values, rotation * g_phi.values, rtol=0, atol=1e-12 * scale)
    assert_allclose(r_q, rotation * g_q, rtol=1e-12)


def test_mass_gradient_pairs_to_twice_mass(charged_state, random_states):
    for s in [charged_state, *random_states]:
        assert_allclose(inner(energy.mass_gradient(s), s), 2 * state.mass(s), rtol=1e-12)


def test_energy_without_power_term_ignores_p(charged_state):
    totals = [energy.total_energy(charged_state, 0.2, 0.0, p).total for p in (2.5, 3.0, 7.0)]
    assert totals[0] == totals[1] == totals[2]


def test_potential_w_of_zero_state(grid):
    s = state.assemble(lattice.Field.zeros(grid), 0.0, 1.0)
    assert_array_equal(energy.potential_w(s).values, 0)


def test_v_split_matches_brute_force():
    grid = lattice.make_grid(4.0, 16)
    s = bounds.random_state(grid, np.random.default_rng(21))
    density = lattice.Field(grid, np.abs(state.values(s)) ** 2)
    h2 = grid.spacing ** 2
    expected = [
        h2 * np.sum(checks.brute_force_convolution(density, kind) * density.values)
        for kind in (lattice.KernelKind.LOG1P_R, lattice.KernelKind.LOG1P_INV_R)
    ]
    assert_allclose(energy.v_split(s), expected, rtol=1e-12)
