import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from pinewton import energy, lattice, solver, specfun, state
from pinewton.bounds import GateCase
from pinewton.exceptions import ConfigurationError, DegenerateStateError, DomainError, PreconditionError
from pinewton.solver import ProbeKind, SolverConfig


@pytest.fixture
def small_config(small_grid):
    return SolverConfig(alpha=0.0, beta=0.0, p=3.0, mass_c=1.0, grid=small_grid, max_iter=30)


@pytest.mark.parametrize('changes, key', [
    ({'p': 2.0}, 'p'),
    ({'mass_c': 0.0}, 'c'),
    ({'grad_tol': -1.0}, 'grad_tol'),
    ({'max_iter': -1}, 'max_iter'),
    ({'step_init': 0.0}, 'step_init'),
    ({'armijo_factor': 1.0}, 'armijo_factor'),
    ({'armijo_slope': 0.0}, 'armijo_slope'),
    ({'regauge_period': 0}, 'regauge_period'),
    ({'q_min_regauge': -1e-3}, 'q_min_regauge'),
    ({'precond_shift': 0.0}, 'precond_shift'),
    ({'init': 'uniform'}, 'init'),
    ({'k_tilde': 0.0}, 'k_tilde'),
])
def test_config_validation(small_config, changes, key):
    with pytest.raises(ConfigurationError) as excinfo:
        replace(small_config, **changes)
    assert excinfo.value.key == key


def test_config_defaults_and_dict(small_config):
    assert small_config.grad_tol == 1e-6
    assert small_config.max_iter == 30
    assert small_config.q_min == 1e-8
    assert replace(small_config, mass_c=4.0).q_min == 2e-8
    assert replace(small_config, q_min_regauge=0.5).q_min == 0.5
    params = small_config.to_dict()
    assert (params['c'], params['L'], params['N']) == (1.0, 6.0, 32)


def test_initial_state_is_bound_state(small_config):
    s = solver.initial_state(small_config)
    lam = specfun.omega_alpha(0.0)
    assert s.gauge_lambda == lam
    assert_array_equal(s.phi.values, 0)
    assert s.charge_q.real > 0 and s.charge_q.imag == 0
    assert_allclose(state.mass(s), 1.0, rtol=1e-12)


@pytest.mark.parametrize('init', ['perturbed', 'gaussian'])
def test_initial_state_variants_are_normalized(small_config, init):
    cfg = replace(small_config, init=init, seed=4, mass_c=2.5)
    s = solver.initial_state(cfg)
    assert_allclose(state.mass(s), 2.5, rtol=1e-12)
    assert np.any(s.phi.values != 0)
    if init == 'gaussian':
        assert s.charge_q == 0


def test_solve_keeps_mass_and_descends(small_config):
    report = solver.solve(small_config)
    history = report.energy_history
    assert all(b <= a for a, b in zip(history, history[1:]))
    assert history[-1] == report.energy.total
    assert_allclose(state.mass(report.final_state), 1.0, rtol=1e-12)
    assert report.iterations <= 30
    assert report.charge_abs > 0
    assert report.gate.case_tag is GateCase.NEG_BETA
    assert 0.0 <= report.edge_mass_fraction <= 1.0


def test_solve_is_deterministic(small_config):
    cfg = replace(small_config, init='perturbed', seed=3, beta=0.5, max_iter=20)
    a = solver.solve(cfg)
    b = solver.solve(cfg)
    assert a.energy_history == b.energy_history
    assert_array_equal(state.values(a.final_state), state.values(b.final_state))
    assert a.omega == b.omega
    assert a.grad_norm == b.grad_norm


def test_solve_with_zero_iterations_reports_initial_state(small_config):
    report = solver.solve(replace(small_config, max_iter=0))
    assert report.iterations == 0
    assert report.converged is False
    assert len(report.energy_history) == 1
    initial = energy.total_energy(solver.initial_state(small_config), 0.0, 0.0, 3.0).total
    assert report.energy.total == initial


def test_solve_lowers_bound_state_energy(small_config):
    report = solver.solve(replace(small_config, max_iter=60))
    assert report.energy.total < report.energy_history[0]


def test_baseline_keeps_charge_zero(small_config):
    report = solver.solve_baseline(small_config)
    assert report.charge_abs == 0
    assert report.final_state.charge_q == 0
    assert report.gauge_refreshes == 0
    assert_allclose(state.mass(report.final_state), 1.0, rtol=1e-12)


def test_gauge_refreshes_are_counted(small_config):
    report = solver.solve(replace(small_config, regauge_period=1, max_iter=10))
    assert report.gauge_refreshes + report.gauge_refresh_rejections >= 1
    assert report.gauge_refresh_rejections <= report.iterations
    if not report.stalled:
        assert len(report.energy_history) == 1 + report.iterations + report.gauge_refreshes


def test_rising_gauge_refresh_is_rejected(small_config, monkeypatch):
    original = solver._refresh_gauge

    def raised(s, cfg):
        refreshed = original(s, cfg)
        if refreshed is None:
            return None
        candidate, parts = refreshed
        return candidate, replace(parts, total=parts.total + 1.0)

    monkeypatch.setattr(solver, '_refresh_gauge', raised)
    report = solver.solve(replace(small_config, regauge_period=1, max_iter=10))
    assert report.gauge_refreshes == 0
    assert report.gauge_refresh_rejections >= 1
    assert report.final_state.gauge_lambda == specfun.omega_alpha(0.0)
    history = report.energy_history
    assert all(b <= a for a, b in zip(history, history[1:]))


def test_gate_violation_warns_but_solves(small_config):
    cfg = replace(small_config, beta=1.0, p=4.0, mass_c=5.0, k_tilde=1.0, max_iter=5)
    report = solver.solve(cfg)
    assert report.gate.case_tag is GateCase.REJECTED
    assert report.iterations <= 5


def test_multistart_and_refine(small_config):
    reports = solver.multistart(replace(small_config, max_iter=5), [0, 1])
    assert len(reports) == 2
    assert all(r.final_state.charge_q != 0 for r in reports)
    refined = solver.refine(replace(small_config, max_iter=5), [16, 32])
    assert [r.final_state.grid.points for r in refined] == [16, 32]


def test_lagrange_multiplier_requires_normalized_state(charged_state):
    with pytest.raises(PreconditionError):
        solver.lagrange_multiplier(charged_state, 0.0, 0.0, 3.0, 10.0)


def test_lagrange_multiplier_bound_state():
    # phi = 0, q chosen for unit mass, beta = 0: omega = -(H + V1 - V2)
    lam = specfun.omega_alpha(0.0)
    grid = lattice.make_grid(10.0 / math.sqrt(lam), 128)
    s = state.normalize(state.assemble(lattice.Field.zeros(grid), 1.0, lam), 1.0)
    parts = energy.total_energy(s, 0.0, 0.0, 3.0)
    omega = solver.lagrange_multiplier(s, 0.0, 0.0, 3.0, 1.0)
    assert_allclose(omega, -(parts.h_alpha + parts.v1 - parts.v2), rtol=1e-14)


def test_least_squares_multiplier_phase_invariant(charged_state):
    s = state.normalize(charged_state, 1.0)
    rotated = state.with_components(s, 1j * s.phi.values, 1j * s.charge_q)
    omega = solver.least_squares_multiplier(s, 0.1, 0.5, 3.0)
    assert math.isfinite(omega)
    assert_allclose(solver.least_squares_multiplier(rotated, 0.1, 0.5, 3.0), omega, rtol=1e-12)


def test_least_squares_multiplier_zero_state(grid):
    with pytest.raises(DegenerateStateError):
        solver.least_squares_multiplier(state.assemble(lattice.Field.zeros(grid), 0.0, 1.0), 0.0, 0.0, 3.0)


def test_el_residual_of_zero_state(grid):
    s = state.assemble(lattice.Field.zeros(grid), 0.0, 1.0)
    assert solver.el_residual(s, 0.7, 0.0, 1.0, 3.0) == (0.0, 0.0)


def test_el_residual_punctured_below_full(charged_state):
    full, punctured = solver.el_residual(charged_state, 0.3, 0.0, 0.5, 3.0)
    assert 0 < punctured <= full


def test_el_residual_is_gradient_plus_multiplier(charged_state):
    omega = 0.4
    g_phi, _ = energy.gradient(charged_state, 0.1, 0.5, 3.0)
    h2 = charged_state.grid.spacing ** 2
    expected = math.sqrt(h2 * np.sum(np.abs(g_phi.values / h2 + omega * state.values(charged_state)) ** 2))
    full, _ = solver.el_residual(charged_state, omega, 0.1, 0.5, 3.0)
    assert_allclose(full, expected, rtol=1e-10)


def test_boundary_defect_examples(charged_state):
    lam = specfun.omega_alpha(0.3)
    grid = lattice.make_grid(8.0, 64)
    bound = state.assemble(lattice.Field.zeros(grid), 1.0, lam)
    assert solver.boundary_defect(bound, 0.3) < 1e-14

    origin = charged_state.phi.values[charged_state.grid.origin_index]
    target = (0.2 + specfun.theta(1.0)) * charged_state.charge_q
    assert_allclose(solver.boundary_defect(charged_state, 0.2), abs(origin - target), rtol=1e-14)


def test_verify_dirac_gaussian_refines():
    coarse = solver.verify_dirac(ProbeKind.GAUSSIAN, 1.0, lattice.make_grid(12.0, 256))
    fine = solver.verify_dirac(ProbeKind.GAUSSIAN, 1.0, lattice.make_grid(12.0, 512))
    assert coarse < 5e-3
    assert fine < coarse


def test_verify_dirac_other_gauges_and_odd_probe():
    grid = lattice.make_grid(12.0, 256)
    assert solver.verify_dirac('gaussian', 4.0, grid) < 5e-3
    assert solver.verify_dirac(ProbeKind.GAUSSIAN_TIMES_X1, 1.0, grid) < 5e-3


def test_verify_dirac_domain(small_grid):
    with pytest.raises(DomainError):
        solver.verify_dirac(ProbeKind.GAUSSIAN, 0.0, small_grid)


@pytest.mark.slow
def test_free_mode_beats_baseline_with_nonzero_charge():
    cfg = SolverConfig(alpha=0.0, beta=0.0, p=3.0, mass_c=1.0,
                       grid=lattice.make_grid(12.0, 128), grad_tol=1e-6)
    free = solver.solve(cfg)
    baseline = solver.solve_baseline(cfg)
    assert free.converged
    assert free.energy.total < baseline.energy.total - 1e-5
    assert free.charge_abs > 1e-2
    assert_allclose(state.mass(free.final_state), 1.0, rtol=1e-12)
    assert free.el_residual_punctured < 2e-3

    tight = solver.solve(replace(cfg, grad_tol=1e-8))
    assert tight.el_residual_punctured < free.el_residual_punctured

    # the origin condition is limited by the mesh, not the tolerance
    fine = solver.solve(replace(cfg, grid=lattice.make_grid(12.0, 256)))
    assert fine.converged
    assert fine.boundary_defect < free.boundary_defect
    assert fine.boundary_defect < 5e-2 * fine.charge_abs
