import itertools
import json
import os
from typing import Any, Dict, List, Optional
import numpy as np
import pandas as pd
from harness.experiment_config import ExperimentConfig
from harness.runner import output_root, run_experiment
from utils.errors import ConfigurationError
from utils.files import write_csv_atomic
from utils.logger import Logger


def grid_points(grid: Dict[str, List[Any]]) -> List[Dict[str, Any]]:
    """Cartesian product of a {dotted key: values} grid, in key order"""
    keys = list(grid)
    for key in keys:
        if not isinstance(grid[key], list) or not grid[key]:
            raise ConfigurationError(f"Grid entry '{key}' must be a non-empty list")
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


def _cell(value):
    if isinstance(value, (dict, list)) or value is None:
        return json.dumps(value, sort_keys=True)
    return value


def sweep_rows(cfg: ExperimentConfig, jobs: int = 1) -> pd.DataFrame:
    """One row per grid point (or per arm when the grid is empty).

    A failing point is recorded with its error message and the sweep goes on.
    """
    logger = Logger('harness')
    if cfg.grid:
        # Grid points replace the arms
        base = cfg.with_overrides({'arms': [], 'grid': {}})
        points = grid_points(cfg.grid)
    else:
        points = [{'arm': arm} for arm in cfg.arm_names()]

    rows = []
    for point in points:
        row = {key: _cell(value) for key, value in point.items()}
        try:
            point_cfg = base.with_overrides(point) if cfg.grid else cfg.for_arm(point['arm'])
            summary = run_experiment(point_cfg, None, jobs=jobs)
            dists = summary['final_dist'].to_numpy(dtype=float)
            row.update({
                'n_seeds': len(summary),
                'mean_final_dist': float(np.nanmean(dists)) if np.isfinite(dists).any() else float('nan'),
                'median_final_dist': float(np.nanmedian(dists)) if np.isfinite(dists).any() else float('nan'),
                'convergence_fraction': float(summary['converged'].mean()),
                'n_aborted': int(summary['abort_t'].notna().sum()),
                'error': '',
            })
        except Exception as e:
            logger.log(f"Sweep point {point} failed: {e}", 'ERROR')
            row.update({'n_seeds': 0, 'mean_final_dist': float('nan'), 'median_final_dist': float('nan'),
                        'convergence_fraction': float('nan'), 'n_aborted': 0, 'error': str(e)})
        rows.append(row)
    return pd.DataFrame(rows)


def cli_sweep(config_path: str, overrides: Optional[Dict[str, Any]] = None,
              grid: Optional[Dict[str, List[Any]]] = None, force: bool = False, jobs: int = 1,
              output: Optional[str] = None) -> int:
    """Aggregated sweep.csv under <output>/<name>/; exit 2 on configuration errors"""
    logger = Logger('harness')
    try:
        cfg = ExperimentConfig.load(config_path).with_overrides(overrides or {})
        if grid:
            cfg = cfg.override('grid', grid)
        if force:
            cfg = cfg.override('force', True)
        root = output_root(output, cfg)
        frame = sweep_rows(cfg, jobs)
    except ConfigurationError as e:
        logger.log(f"Configuration error: {e}", 'ERROR')
        print(f"error: {e}")
        return 2
    path = write_csv_atomic(frame, os.path.join(root, cfg.name, 'sweep.csv'))
    print(frame.to_string(index=False))
    print(f"Wrote {len(frame)} sweep rows to {path}")
    return 0
