"""Turn an ExperimentConfig plus a seed into a runnable trial."""
from dataclasses import dataclass
from typing import Any, Dict, Optional
import numpy as np
from approx.reducers import ReductionInjector
from dynamics.factory import initial_state, make_example, make_sample_loss
from dynamics.losses import PeriodicLinearLoss
from dynamics.system import System
from harness.experiment_config import ExperimentConfig
from rtrl.injectors import ErrorInjector
from rtrl.learner import run_learning
from rtrl.records import TrialRecord
from schedules.exponents import ExponentProfile, validate_exponents
from schedules.step_schedule import StepSchedule
from tbptt.backprop import check_truncation, run_tbptt
from tbptt.truncation import TruncationSchedule
from updates.param_ops import ParamUpdateOp, make_param_op
from updates.rules import UpdateRule, make_rule, rule_adam
from utils.errors import ConfigurationError
from utils.rng import trial_streams

ALGORITHM_CLASS = {
    'sgd': 'exact_rtrl', 'rtrl': 'exact_rtrl', 'rmsprop': 'exact_rtrl', 'ong': 'exact_rtrl',
    'adam': 'exact_rtrl', 'uoro': 'imperfect_rtrl', 'nobacktrack': 'imperfect_rtrl', 'tbptt': 'tbptt',
}


@dataclass
class Problem:
    system: System
    s0: np.ndarray
    theta0: np.ndarray
    theta_star: Optional[np.ndarray]
    schedule: StepSchedule
    rule: UpdateRule
    phi: ParamUpdateOp
    injector: Optional[ErrorInjector]
    trunc: Optional[TruncationSchedule]
    profile: Optional[ExponentProfile]
    streams: Dict[str, np.random.Generator]


def exponent_profile(cfg: ExperimentConfig) -> Optional[ExponentProfile]:
    if not cfg.exponents:
        return None
    trunc_A = cfg.trunc.get('A', 0.0 if cfg.trunc.get('fixed_length') else None)
    return ExponentProfile(float(cfg.exponents.get('a', 0.0)), float(cfg.exponents.get('gamma', 0.0)),
                           ALGORITHM_CLASS[cfg.algorithm], trunc_A)


def _truncation(cfg: ExperimentConfig) -> TruncationSchedule:
    if cfg.trunc.get('fixed_length') is not None:
        return TruncationSchedule(fixed_length=int(cfg.trunc['fixed_length']))
    if cfg.trunc.get('A') is None:
        raise ConfigurationError(f"Experiment '{cfg.name}': tbptt needs trunc.A or trunc.fixed_length")
    return TruncationSchedule(A=float(cfg.trunc['A']))


def _adam(cfg: ExperimentConfig, params: Dict[str, Any], rng):
    options = cfg.rule_options
    if cfg.system['kind'] == 'adam_counterexample':
        loss = PeriodicLinearLoss(float(params.get('C', 3.0)), int(params.get('period', 3)))
        theta_star = np.array([-1.0])
    else:
        loss, theta_star = make_sample_loss(params, rng)
    return rule_adam(loss, float(options.get('beta1', 0.9)), float(options.get('c', 1.0)),
                     options.get('eps'), options.get('timing', 'psi_first'),
                     options.get('fixed_beta'), options.get('preconditioner', 'rmsprop'),
                     theta_star)


def build_problem(cfg: ExperimentConfig, seed: int) -> Problem:
    """System, rule, injector and generators of one trial; raises ConfigurationError on bad input"""
    streams = trial_streams(cfg.name, seed)
    params = dict(cfg.system.get('params', {}))
    params.setdefault('sampling', cfg.sampling)
    schedule = StepSchedule(float(cfg.schedule['gamma']), float(cfg.schedule['b']))

    if cfg.algorithm == 'adam':
        system, rule = _adam(cfg, params, streams['sampler'])
    else:
        system = make_example(cfg.system['kind'], params, streams['sampler'])
        if cfg.algorithm == 'sgd' and system.recurrent:
            raise ConfigurationError(f"Experiment '{cfg.name}': sgd needs a non-recurrent system")
        rule_name = cfg.algorithm if cfg.algorithm in ('rmsprop', 'ong') else (cfg.rule or 'identity')
        rule = make_rule(rule_name, system, cfg.rule_options)

    injector = None
    if cfg.algorithm in ('uoro', 'nobacktrack'):
        injector = ReductionInjector(cfg.algorithm, cfg.rule_options.get('degenerate', 'unit'))

    profile = exponent_profile(cfg)
    trunc = None
    if cfg.algorithm == 'tbptt':
        trunc = _truncation(cfg)
        check_truncation(profile, schedule, trunc, cfg.force)
    elif profile is not None:
        valid, violations = validate_exponents(profile, schedule.b)
        if not valid and not cfg.force:
            raise ConfigurationError(
                f"Experiment '{cfg.name}': invalid exponents for {profile.algorithm_class}: " + "; ".join(violations))
    rule.validate_schedule(schedule)

    theta0 = np.zeros(system.param_dim) if cfg.theta0 is None else np.asarray(cfg.theta0, dtype=float)
    if theta0.shape != (system.param_dim,):
        raise ConfigurationError(
            f"Experiment '{cfg.name}': theta0 has shape {theta0.shape}, system needs ({system.param_dim},)")
    theta_star = getattr(system, 'theta_star', None)
    return Problem(system, initial_state(system, params), theta0,
                   None if theta_star is None else np.asarray(theta_star, dtype=float),
                   schedule, rule, make_param_op(cfg.param_op), injector, trunc, profile, streams)


def run_problem(cfg: ExperimentConfig, problem: Problem, seed: int) -> TrialRecord:
    config_hash = cfg.config_hash(seed)
    if problem.trunc is not None:
        return run_tbptt(problem.system, problem.s0, problem.theta0, problem.schedule, problem.trunc,
                         int(cfg.horizon), cfg.trunc.get('reset_policy', 'carry_state'),
                         cfg.trunc.get('s_reset'), problem.rule, problem.phi,
                         cfg.trunc.get('update_mode', 'aggregated'), problem.profile, cfg.force,
                         problem.theta_star, config_hash=config_hash)
    return run_learning(problem.system, problem.s0, problem.theta0, None, problem.schedule,
                        problem.rule, problem.phi, problem.injector, int(cfg.horizon),
                        problem.streams['signs'], problem.theta_star, config_hash=config_hash)
