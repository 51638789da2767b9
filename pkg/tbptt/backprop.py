"""Non-overlapping truncated backpropagation through time.

The parameter is frozen on each interval (t_k, t_{k+1}]; the states are run
forward once, stored, and an adjoint pass accumulates
sum_t dL_{t_k -> t}/dtheta. Stored states are bounded by the current interval
length, so memory grows like t^A.
"""
from typing import List, Optional, Tuple
import numpy as np
from dynamics.system import System, step
from rtrl.learner import open_loop_gradients
from rtrl.records import TrialRecord
from schedules.exponents import ExponentProfile, validate_exponents
from schedules.step_schedule import StepSchedule
from tbptt.truncation import TruncationSchedule
from updates.param_ops import ParamUpdateOp, PlainUpdate
from updates.rules import IdentityRule, UpdateRule
from utils.errors import ConfigurationError, ContractViolationError, NumericOverflowError
from utils.logger import Logger
from utils.numerics import check_finite

RESET_POLICIES = ('carry_state', 'reset_to')
UPDATE_MODES = ('aggregated', 'per_step')


class TruncatedBackprop:
    """Forward/adjoint pass over one interval; counts backward visits of stored states"""

    def __init__(self, sys: System):
        self.sys = sys
        self.backward_visits = 0

    def forward(self, s_start, theta, t_start: int, t_end: int) -> List[np.ndarray]:
        states = [np.asarray(s_start, dtype=float)]
        for t in range(t_start + 1, t_end + 1):
            states.append(step(self.sys, t, states[-1], theta))
        return states

    def interval_gradient(self, s_start, theta, t_start: int, t_end: int) -> Tuple[np.ndarray, np.ndarray, float]:
        """(sum of interval gradients, state at t_end, summed loss)"""
        if t_end <= t_start:
            raise ContractViolationError(f"Interval needs t_end > t_start, got ({t_start}, {t_end}]")
        theta = np.asarray(theta, dtype=float)
        states = self.forward(s_start, theta, t_start, t_end)
        self.backward_visits = 0

        adjoint = np.zeros(states[-1].shape[0])
        grad = np.zeros(theta.shape[0])
        loss = 0.0
        for t in range(t_end, t_start, -1):
            s_prev, s_t = states[t - t_start - 1], states[t - t_start]
            loss += float(self.sys.loss(t, s_t))
            adjoint = adjoint + np.asarray(self.sys.d_loss_ds(t, s_t), dtype=float)
            grad += adjoint @ np.atleast_2d(self.sys.d_transition_dtheta(t, s_prev, theta))
            adjoint = check_finite(adjoint @ np.atleast_2d(self.sys.d_transition_ds(t, s_prev, theta)),
                                   'gradient', t)
            self.backward_visits += 1
        return check_finite(grad, 'gradient', t_end), states[-1], loss


def bptt_interval_gradient(sys: System, s_start, theta, t_start: int, t_end: int) -> np.ndarray:
    """sum_{t=t_start+1}^{t_end} dL_{t_start -> t}(s_start, theta)/dtheta"""
    return TruncatedBackprop(sys).interval_gradient(s_start, theta, t_start, t_end)[0]


def check_truncation(profile: Optional[ExponentProfile], schedule: StepSchedule,
                     trunc: TruncationSchedule, force: bool = False) -> List[str]:
    """Violations of max(a, gamma) < A < b - 2*gamma; raises unless force is set"""
    if profile is None:
        return []
    checked = ExponentProfile(profile.a, profile.gamma_loss, 'tbptt', trunc.exponent())
    valid, violations = validate_exponents(checked, schedule.b)
    if not valid and not force:
        raise ConfigurationError("Invalid truncation exponents: " + "; ".join(violations))
    return violations


def run_tbptt(sys: System, s0, theta0, schedule: StepSchedule, trunc: TruncationSchedule, T: int,
              reset_policy: str = 'carry_state', s_reset=None, rule: UpdateRule = None,
              phi: ParamUpdateOp = None, update_mode: str = 'aggregated',
              profile: Optional[ExponentProfile] = None, force: bool = False,
              theta_star=None, aux0=None, config_hash: str = '',
              keep_gradients: bool = False) -> TrialRecord:
    """TBPTT over [0, T], recording theta at every interval boundary.

    aggregated: theta_{t_{k+1}} = Phi(theta_{t_k}, eta_{t_{k+1}} U(g_k)) with
    g_k the summed interval gradient. per_step applies Phi once per time step
    of the interval with the open-loop gradient of that step, still at the
    frozen theta_{t_k}.
    """
    logger = Logger('tbptt')
    if T < 1:
        raise ContractViolationError(f"run_tbptt needs T >= 1, got {T}")
    if reset_policy not in RESET_POLICIES:
        raise ConfigurationError(f"Unknown reset policy '{reset_policy}', expected one of {RESET_POLICIES}")
    if reset_policy == 'reset_to' and s_reset is None:
        raise ConfigurationError("reset_to needs a reset state")
    if update_mode not in UPDATE_MODES:
        raise ConfigurationError(f"Unknown update mode '{update_mode}', expected one of {UPDATE_MODES}")
    rule = rule or IdentityRule()
    phi = phi or PlainUpdate()
    violations = check_truncation(profile, schedule, trunc, force)
    if violations:
        logger.log(f"Running TBPTT with invalid exponents (forced): {'; '.join(violations)}", 'WARNING')
    rule.validate_schedule(schedule)
    if theta_star is None:
        theta_star = getattr(sys, 'theta_star', None)

    engine = TruncatedBackprop(sys)
    theta = np.array(theta0, dtype=float)
    aux = rule.initial_aux(theta.shape[0]) if aux0 is None else np.asarray(aux0, dtype=float)
    s = np.array(s0, dtype=float)
    record = TrialRecord(theta_star=None if theta_star is None else np.asarray(theta_star, dtype=float),
                         config_hash=config_hash, keep_gradients=keep_gradients)
    record.append(0, theta, interval_k=0)

    for k, t_start, t_end in trunc.intervals(T):
        if reset_policy == 'reset_to' and k > 0:
            s = np.array(s_reset, dtype=float)
        try:
            grad, s_end, loss = engine.interval_gradient(s, theta, t_start, t_end)
            eta = schedule.eta(t_end)
            if update_mode == 'aggregated':
                direction, aux = rule.step(t_end, grad, s_end, theta, aux, eta)
                theta_new = phi.apply(t_end, theta, eta * direction)
            else:
                theta_new = theta
                for t, g in zip(range(t_start + 1, t_end + 1), open_loop_gradients(sys, s, theta, t_end - t_start, t_start)):
                    direction, aux = rule.step(t, g, s_end, theta, aux, eta)
                    theta_new = phi.apply(t, theta_new, eta * direction)
            theta = check_finite(theta_new, 'update', t_end)
        except NumericOverflowError as e:
            logger.abort('TBPTT', e)
            record.abort(t_end if e.t is None else e.t, e.stage)
            break
        s = s_end
        record.append(t_end, theta, loss / (t_end - t_start), grad, interval_k=k + 1)
    return record
