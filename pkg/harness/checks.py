"""`check` subcommands: exponent validation, stability, local optimum and reducer unbiasedness."""
from typing import Any, Dict, List, Optional, Tuple
import numpy as np
from approx.unbiasedness import random_check_system, verify_unbiased, write_unbiased_report
from diagnostics.optimum import local_optimum_report
from diagnostics.reports import format_report
from diagnostics.stability import check_stability
from harness.experiment_config import ExperimentConfig
from harness.problems import build_problem
from schedules.exponents import CLASS_ALIASES, ExponentProfile, moment_rate_range, validate_exponents
from utils.errors import BudgetError, ConfigurationError, DomainError
from utils.logger import Logger
from utils.rng import generator

CHECKS = ('schedule', 'stability', 'optimum', 'unbiased')


def check_schedule(algorithm_class: str = 'exact', a: float = 0.0, gamma: float = 0.0,
                   b: Optional[float] = None, A: Optional[float] = None,
                   h: Optional[float] = None) -> Tuple[bool, List[str]]:
    """Verdict plus report lines for an exponent profile, or for the moment rule when h is given"""
    if h is not None:
        rate_range = moment_rate_range(h)
        lines = [f"moment order h = {h}: admissible b in ({rate_range.b_min:.6g}, {rate_range.b_max:.6g}]"]
        if rate_range.empty:
            lines.append("empty interval: no admissible b")
        if b is None:
            return not rate_range.empty, lines
        valid = rate_range.b_min < b <= rate_range.b_max
        lines.append(f"b = {b}: {'valid' if valid else 'invalid'}")
        return valid, lines
    if b is None:
        raise ConfigurationError("check schedule needs --b (or --h for the moment rule)")
    if algorithm_class not in CLASS_ALIASES:
        raise ConfigurationError(f"Unknown algorithm class '{algorithm_class}'")
    profile = ExponentProfile(a, gamma, CLASS_ALIASES[algorithm_class], A)
    valid, violations = validate_exponents(profile, b)
    lines = [f"{profile.algorithm_class}: a={a}, gamma={gamma}, b={b}" + (f", A={A}" if A is not None else ''),
             'valid' if valid else 'invalid']
    lines.extend(f"  violated: {v}" for v in violations)
    return valid, lines


def _problem(config_path: str, overrides: Optional[Dict[str, Any]]):
    cfg = ExperimentConfig.load(config_path).with_overrides(overrides or {})
    cfg = cfg.for_arm(cfg.arm_names()[0])
    problem = build_problem(cfg, cfg.seeds[0])
    if problem.theta_star is None:
        raise ConfigurationError(f"Experiment '{cfg.name}' has no known theta* to check at")
    return cfg, problem


def cli_check(check: str, options: Dict[str, Any]) -> int:
    """Print a report; exit 0 on pass, 1 on fail, 2 on configuration errors"""
    logger = Logger('harness')
    try:
        if check == 'schedule':
            valid, lines = check_schedule(options.get('algorithm_class', 'exact'), options.get('a', 0.0),
                                          options.get('gamma', 0.0), options.get('b'), options.get('A'),
                                          options.get('h'))
            print('\n'.join(lines))
            return 0 if valid else 1

        if check == 'stability':
            cfg, problem = _problem(options['config'], options.get('overrides'))
            certificate = check_stability(problem.system, problem.theta_star, problem.s0,
                                          int(options.get('T') or 200), options.get('k_max'))
            if certificate is None:
                print(f"{cfg.name}: no stability certificate found")
                return 1
            print(format_report(certificate))
            return 0

        if check == 'optimum':
            cfg, problem = _problem(options['config'], options.get('overrides'))
            theta_plus = problem.theta_star
            aux = options.get('aux')
            if aux is not None:
                theta_plus = np.concatenate([theta_plus, np.asarray(aux, dtype=float)])
            report = local_optimum_report(problem.system, problem.rule, theta_plus,
                                          int(options.get('T') or 1000), problem.s0, options.get('epoch'))
            print(format_report(report))
            return 0 if report.passed else 1

        if check == 'unbiased':
            dim = int(options.get('dim', 2))
            p = int(options.get('p') or 3)
            seed = int(options.get('seed') or 0)
            system = random_check_system(dim, p, seed)
            rng = generator(seed + 1)
            report = verify_unbiased(system, rng.standard_normal(p), rng.standard_normal(dim),
                                     options.get('reducer', 'uoro'), int(options.get('steps', 1)), seed=seed)
            if options.get('output'):
                write_unbiased_report([report], options['output'])
            print(format_report(report))
            return 0 if report.passed else 1
        raise ConfigurationError(f"Unknown check '{check}', expected one of {CHECKS}")
    except (ConfigurationError, DomainError, BudgetError) as e:
        logger.log(f"check {check} failed: {e}", 'ERROR')
        print(f"error: {e}")
        return 2
