"""JSON reports and CSV dumps written by the command line"""
import csv
import json
import logging
import os

import numpy as np

from pinewton import __version__, state

logger = logging.getLogger(__name__)

FIELD_COLUMNS = ('x', 'y', 're_phi', 'im_phi', 're_u', 'im_u')
SWEEP_COLUMNS = ('c', 'energy', 'omega', 'charge_abs', 'boundary_defect')


def _number(value):
    return format(float(value), '.17g')


def solve_report_dict(report, cfg, wall_seconds):
    """Everything a report.json carries for one solve"""
    q = report.final_state.charge_q
    return {
        'version': __version__,
        'parameters': cfg.to_dict(),
        'energy': report.energy.to_dict(),
        'omega': report.omega,
        'charge': {'re': q.real, 'im': q.imag, 'abs': report.charge_abs},
        'gauge_lambda': report.gauge_lambda,
        'grad_norm': report.grad_norm,
        'iterations': report.iterations,
        'converged': report.converged,
        'stalled': report.stalled,
        'residuals': {
            'el_full': report.el_residual_full,
            'el_punctured': report.el_residual_punctured
        },
        'boundary_defect': report.boundary_defect,
        'gate': report.gate.to_dict() if report.gate is not None else None,
        'gauge_refreshes': report.gauge_refreshes,
        'gauge_refresh_rejections': report.gauge_refresh_rejections,
        'edge_mass_fraction': report.edge_mass_fraction,
        'energy_history': report.energy_history,
        'wall_clock_seconds': wall_seconds
    }


def write_json(path, data):
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, indent=2, sort_keys=True)
        handle.write('\n')
    logger.info(f"Wrote {path}")


def write_field_csv(path, s):
    """Node coordinates with phi and u = phi + q G at every node"""
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    x, y = s.grid.mesh()
    phi = s.phi.values
    u = state.values(s)
    columns = [x, y, phi.real, phi.imag, u.real, u.imag]
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(FIELD_COLUMNS)
        for row in zip(*(np.ravel(column) for column in columns)):
            writer.writerow([_number(v) for v in row])
    logger.info(f"Wrote {path}")


def sweep_row(c, report):
    return {
        'c': c,
        'energy': report.energy.total,
        'omega': report.omega,
        'charge_abs': report.charge_abs,
        'boundary_defect': report.boundary_defect
    }


def write_sweep_csv(path, rows):
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _number(row[key]) for key in SWEEP_COLUMNS})
    logger.info(f"Wrote {path}")
