import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence
import pandas as pd
from config import Config
from diagnostics.convergence import convergence_detector
from harness.experiment_config import ExperimentConfig
from harness.problems import build_problem, run_problem
from utils.errors import ConfigurationError
from utils.files import write_csv_atomic
from utils.logger import Logger

SUMMARY_COLUMNS = ['arm', 'seed', 'converged', 'final_dist', 'abort_t']


def output_root(output: Optional[str] = None, cfg: Optional[ExperimentConfig] = None) -> str:
    """--output, then the config's output_dir, then $RTRL_OUTPUT_ROOT, then the default"""
    if output:
        return output
    if cfg is not None and cfg.output_dir:
        return cfg.output_dir
    return os.environ.get('RTRL_OUTPUT_ROOT', Config.OUTPUT_ROOT)


def trial_path(root: str, experiment: str, arm: str, seed: int) -> str:
    return os.path.join(root, experiment, arm, f"{seed}.csv")


def run_trial(cfg_data: Dict[str, Any], arm: str, seed: int, root: Optional[str]) -> Dict[str, Any]:
    """Run one (arm, seed) trial, write its CSV when root is given and return its summary row"""
    logger = Logger('harness')
    cfg = ExperimentConfig.from_dict(cfg_data)
    problem = build_problem(cfg, seed)
    logger.log(f"Trial {cfg.name}/{arm}/seed={seed} started ({cfg.algorithm}, T={cfg.horizon})")
    record = run_problem(cfg, problem, seed)
    if root is not None:
        record.to_csv(trial_path(root, cfg.name, arm, seed))

    abort_t = record.abort_t
    verdict = convergence_detector(record, tol=cfg.tol, window=cfg.window) \
        if record.theta_star is not None or record.is_aborted else None
    row = {
        'arm': arm,
        'seed': int(seed),
        'converged': bool(verdict is not None and verdict.converged),
        'final_dist': record.final_dist(),
        'abort_t': abort_t,
    }
    logger.log(f"Trial {cfg.name}/{arm}/seed={seed} finished: final_dist={row['final_dist']:.4g}"
               + (f", aborted at t={abort_t}" if abort_t is not None else ''))
    return row


def _run_all(tasks: List[tuple], jobs: int) -> List[Dict[str, Any]]:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(run_trial, *zip(*tasks)))
    return [run_trial(*task) for task in tasks]


def run_experiment(cfg: ExperimentConfig, root: Optional[str], seeds: Optional[Sequence[int]] = None,
                   jobs: int = 1) -> pd.DataFrame:
    """All arms x seeds; writes trial CSVs and summary.csv under <root>/<name>/ when root is given.

    Every arm is built once up front so configuration errors surface before
    any trial runs.
    """
    seeds = list(cfg.seeds if seeds is None else seeds)
    tasks = []
    for arm in cfg.arm_names():
        arm_cfg = cfg.for_arm(arm)
        build_problem(arm_cfg, seeds[0])
        tasks.extend((arm_cfg.to_dict(), arm, seed, root) for seed in seeds)

    summary = pd.DataFrame(_run_all(tasks, jobs), columns=SUMMARY_COLUMNS)
    summary['abort_t'] = summary['abort_t'].astype('Int64')
    if root is not None:
        write_csv_atomic(summary, os.path.join(root, cfg.name, 'summary.csv'))
    return summary


def cli_run(config_path: str, overrides: Optional[Dict[str, Any]] = None, seeds: Optional[Sequence[int]] = None,
            force: bool = False, jobs: int = 1, output: Optional[str] = None) -> int:
    """Exit code 0 on completion, 2 on configuration errors"""
    logger = Logger('harness')
    try:
        cfg = ExperimentConfig.load(config_path).with_overrides(overrides or {})
        if force:
            cfg = cfg.override('force', True)
        root = output_root(output, cfg)
        summary = run_experiment(cfg, root, seeds, jobs)
    except ConfigurationError as e:
        logger.log(f"Configuration error: {e}", 'ERROR')
        print(f"error: {e}")
        return 2
    print(summary.to_string(index=False))
    print(f"Wrote {len(summary)} trials to {os.path.join(root, cfg.name)}")
    return 0
