"""
Command line: solve, baseline, verify and sweep runs.

Configuration comes from an optional key = value file merged with flag
overrides, validated by RunConfigForm, and turned into a RunConfig.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime
from typing import List, Optional

import click
from werkzeug.datastructures import MultiDict

from pinewton import __version__, active_config_name, checks, configure, lattice, reports, solver
from pinewton.exceptions import ConfigurationError, NonFiniteError
from pinewton.forms import RunConfigForm, RunMode

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFY_FAILED = 3

EDGE_MASS_WARNING = 1e-6


@dataclass(frozen=True)
class RunConfig:
    mode: str
    solver: solver.SolverConfig
    sweep_masses: Optional[List[float]]
    output_dir: str
    emit_fields: bool
    jobs: int = 1


def _normalize_key(key):
    return key.strip().replace('-', '_')


def read_config_file(path):
    """Parse key = value lines; '#' starts a comment"""
    known = set(RunConfigForm().data)
    entries = {}
    try:
        with open(path, encoding='utf-8') as handle:
            lines = handle.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigurationError('config', f'cannot read {path}: {e}')

    for number, raw in enumerate(lines, 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigurationError('config', f'line {number}: expected "key = value", got {raw!r}')
        key, value = line.split('=', 1)
        key = _normalize_key(key)
        if key not in known:
            raise ConfigurationError(key, 'unknown key')
        entries[key] = value.strip()
    return entries


def load_config(path=None, mode=RunMode.SOLVE, overrides=None):
    """Merge the file (if any) with flag overrides and validate the result"""
    merged = read_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        key = _normalize_key(key)
        if value is None:
            continue
        merged[key] = value if isinstance(value, str) else repr(value)

    known = set(RunConfigForm().data)
    for key in merged:
        if key not in known:
            raise ConfigurationError(key, 'unknown key')

    form = RunConfigForm(MultiDict(merged), mode=mode)
    if not form.validate():
        key, message = form.first_error()
        raise ConfigurationError(key, message)

    grid = lattice.make_grid(form.L.data, form.N.data)
    solver_cfg = solver.SolverConfig(
        alpha=form.alpha.data,
        beta=form.beta.data,
        p=form.p.data,
        mass_c=form.c.data if form.c.data is not None else 1.0,
        grid=grid,
        max_iter=form.max_iter.data,
        grad_tol=form.grad_tol.data,
        step_init=form.step_init.data,
        armijo_factor=form.armijo_factor.data,
        armijo_slope=form.armijo_slope.data,
        regauge_period=form.regauge_period.data,
        q_min_regauge=form.q_min_regauge.data,
        seed=form.seed.data,
        precond_shift=form.precond_shift.data,
        init=form.init.data,
        k_tilde=form.k_tilde.data,
        gn_samples=form.gn_samples.data
    )
    return RunConfig(
        mode=mode,
        solver=solver_cfg,
        sweep_masses=form.masses,
        output_dir=form.out.data,
        emit_fields=bool(form.emit_fields.data),
        jobs=form.jobs.data
    )


# Runs

def _banner(title):
    start_time = datetime.now()
    logger.info("=" * 70)
    logger.info(title)
    logger.info("=" * 70)
    logger.info(f"Started at: {start_time.isoformat()}")
    logger.info("")
    return start_time


def _finish(start_time, ok, message):
    end_time = datetime.now()
    duration = (end_time - start_time).total_seconds()
    logger.info("")
    logger.info("=" * 70)
    logger.info(f"{'✓' if ok else '✗'} {message}")
    logger.info(f"Duration: {duration:.2f} seconds")
    logger.info(f"Completed at: {end_time.isoformat()}")
    logger.info("=" * 70)
    return duration


def _timed_solve(cfg):
    start = datetime.now()
    report = solver.solve(cfg)
    return report, (datetime.now() - start).total_seconds()


def _warn_on_report(report):
    if report.gate is not None and report.gate.heuristic:
        logger.warning(f"⚠ Admissibility is heuristic: {report.gate.detail}")
    if report.edge_mass_fraction > EDGE_MASS_WARNING:
        logger.warning(
            f"⚠ {report.edge_mass_fraction:.2e} of the mass lies near the box edge; consider a larger L"
        )


def run_solve(rc):
    start_time = _banner(f"pinewton solve (c={rc.solver.mass_c}, {rc.solver.grid!r})")
    report, wall = _timed_solve(rc.solver)
    _warn_on_report(report)

    reports.write_json(os.path.join(rc.output_dir, 'report.json'),
                       reports.solve_report_dict(report, rc.solver, wall))
    if rc.emit_fields:
        reports.write_field_csv(os.path.join(rc.output_dir, 'u_field.csv'), report.final_state)

    logger.info(f"  - Energy: {report.energy.total:.12g}")
    logger.info(f"  - omega: {report.omega:.9g}")
    logger.info(f"  - |q|: {report.charge_abs:.6g}")
    logger.info(f"  - Boundary defect: {report.boundary_defect:.3e}")
    _finish(start_time, report.converged,
            'Solve converged' if report.converged else 'Solve did not converge')
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def run_baseline(rc):
    start_time = _banner(f"pinewton baseline (c={rc.solver.mass_c}, {rc.solver.grid!r})")

    logger.info("[1/2] Free-charge solve...")
    free, free_wall = _timed_solve(replace(rc.solver, freeze_charge=False))
    _warn_on_report(free)

    logger.info("\n[2/2] Baseline solve (charge pinned to zero)...")
    base, base_wall = _timed_solve(replace(rc.solver, freeze_charge=True))

    gap = free.energy.total - base.energy.total
    reports.write_json(os.path.join(rc.output_dir, 'baseline.json'), {
        'version': __version__,
        'free': reports.solve_report_dict(free, replace(rc.solver, freeze_charge=False), free_wall),
        'baseline': reports.solve_report_dict(base, replace(rc.solver, freeze_charge=True), base_wall),
        'gap': gap
    })

    status = "✓" if gap < 0 else "✗"
    logger.info(f"  {status} m_alpha(c) - m(c) = {gap:.6e}")
    converged = free.converged and base.converged
    _finish(start_time, converged, 'Baseline comparison completed' if converged else 'A solve did not converge')
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def run_verify(rc):
    grid = rc.solver.grid
    start_time = _banner(f"pinewton verify ({grid!r})")
    results = checks.run_identity_suite(grid)
    passed = all(r.passed for r in results)

    reports.write_json(os.path.join(rc.output_dir, 'verify.json'), {
        'version': __version__,
        'grid': {'L': grid.half_width, 'N': grid.points},
        'checks': [r.to_dict() for r in results],
        'passed': passed
    })
    _finish(start_time, passed, 'All identity checks passed' if passed else 'Identity suite failed')
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def _sweep_entry(cfg, directory):
    """Solve one sweep entry and write its own report"""
    report, wall = _timed_solve(cfg)
    _warn_on_report(report)
    reports.write_json(os.path.join(directory, 'report.json'), reports.solve_report_dict(report, cfg, wall))
    return reports.sweep_row(cfg.mass_c, report), report.converged


def run_sweep(rc):
    masses = rc.sweep_masses
    start_time = _banner(f"pinewton sweep over {len(masses)} masses ({rc.solver.grid!r})")
    configs = [replace(rc.solver, mass_c=c) for c in masses]
    directories = [os.path.join(rc.output_dir, 'sweep', f'c={c!r}') for c in masses]

    if rc.jobs > 1:
        logger.info(f"Running {len(configs)} entries on {rc.jobs} processes")
        with ProcessPoolExecutor(max_workers=rc.jobs, initializer=configure,
                                 initargs=(active_config_name(),)) as pool:
            outcomes = list(pool.map(_sweep_entry, configs, directories))
    else:
        outcomes = [_sweep_entry(cfg, directory) for cfg, directory in zip(configs, directories)]

    rows = [row for row, _ in outcomes]
    reports.write_sweep_csv(os.path.join(rc.output_dir, 'sweep.csv'), rows)
    for (row, converged) in outcomes:
        logger.info(f"  {'✓' if converged else '✗'} c={row['c']}: E={row['energy']:.12g} |q|={row['charge_abs']:.6g}")

    converged = all(ok for _, ok in outcomes)
    _finish(start_time, converged, 'Sweep completed' if converged else 'Some sweep entries did not converge')
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


RUNNERS = {
    RunMode.SOLVE: run_solve,
    RunMode.BASELINE: run_baseline,
    RunMode.VERIFY: run_verify,
    RunMode.SWEEP: run_sweep
}


# Click surface

def run_options(func):
    """Options shared by every subcommand"""
    options = [
        click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                     help='key = value configuration file'),
        click.option('--alpha', type=float, help='Point-interaction strength'),
        click.option('--beta', type=float, help='Power nonlinearity coefficient'),
        click.option('--p', 'p', type=float, help='Power nonlinearity exponent (> 2)'),
        click.option('--c', 'c', type=float, help='Mass constraint'),
        click.option('--L', 'L', type=float, help='Box half-width'),
        click.option('--N', 'N', type=int, help='Nodes per axis (even, >= 8)'),
        click.option('--grad-tol', 'grad_tol', type=float, help='Projected gradient tolerance'),
        click.option('--max-iter', 'max_iter', type=int, help='Iteration cap'),
        click.option('--seed', type=int, help='Random seed'),
        click.option('--out', type=click.Path(file_okay=False), help='Output directory'),
        click.option('--emit-fields', 'emit_fields', is_flag=True, help='Also write u_field.csv'),
        click.option('--sweep-masses', 'sweep_masses', type=str, help='Comma-separated masses for sweep'),
        click.option('--jobs', type=int, help='Concurrent sweep entries')
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _execute(ctx, mode, config_path, options):
    if not options.get('emit_fields'):
        options['emit_fields'] = None
    try:
        rc = load_config(config_path, mode, options)
    except ConfigurationError as e:
        raise click.UsageError(str(e), ctx=ctx)
    return RUNNERS[mode](rc)


@click.group()
@click.version_option(__version__, prog_name='pinewton')
def cli():
    """Normalized ground states with a point interaction"""


@cli.command()
@run_options
@click.pass_context
def solve(ctx, config_path, **options):
    """Minimize the energy at fixed mass c"""
    return _execute(ctx, RunMode.SOLVE, config_path, options)


@cli.command()
@run_options
@click.pass_context
def baseline(ctx, config_path, **options):
    """Compare against the uncharged minimum"""
    return _execute(ctx, RunMode.BASELINE, config_path, options)


@cli.command()
@run_options
@click.pass_context
def verify(ctx, config_path, **options):
    """Run the identity suite"""
    return _execute(ctx, RunMode.VERIFY, config_path, options)


@cli.command()
@run_options
@click.pass_context
def sweep(ctx, config_path, **options):
    """Solve along a list of masses"""
    return _execute(ctx, RunMode.SWEEP, config_path, options)


def run(argv=None):
    """Entry point returning the exit code"""
    try:
        result = cli.main(args=list(argv) if argv is not None else None,
                          prog_name='pinewton', standalone_mode=False)
    except click.UsageError as e:
        if e.ctx is not None:
            click.echo(e.ctx.get_usage(), err=True)
        click.echo(f"Error: {e.format_message()}", err=True)
        return EXIT_INVALID
    except click.ClickException as e:
        click.echo(f"Error: {e.format_message()}", err=True)
        return EXIT_INVALID
    except NonFiniteError as e:
        logger.error(f"✗ Solve aborted: {e}")
        return EXIT_NOT_CONVERGED
    return result if isinstance(result, int) else EXIT_OK
