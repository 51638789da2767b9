"""Exact, extended and imperfect RTRL.

One step, in order: s_t = T_t(s_{t-1}, theta_{t-1}); J_t = jac_s J_{t-1} +
jac_theta (+ E_t); v_t = dl_t/ds(s_t) J_t; theta_t = Phi_t(theta_{t-1},
eta_t U_t(v_t, s_t, theta_{t-1})).
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple
import numpy as np
from approx.rank_one import JacobianEstimate, RankOnePair, as_matrix, gauge_bound
from dynamics.system import System, step
from rtrl.injectors import ErrorInjector
from rtrl.records import TrialRecord
from schedules.step_schedule import StepSchedule
from updates.param_ops import ParamUpdateOp, PlainUpdate
from updates.rules import IdentityRule, UpdateRule
from utils.errors import ContractViolationError, NumericOverflowError
from utils.logger import Logger
from utils.numerics import check_finite, operator_norm

DIAGNOSTICS = ('error_norm', 'gauge_bound', 'jacobian_norm')


@dataclass(frozen=True)
class LearnerState:
    t: int
    s: np.ndarray
    J: JacobianEstimate
    theta: np.ndarray
    aux: Optional[np.ndarray] = None

    def jacobian_matrix(self) -> np.ndarray:
        return as_matrix(self.J)


@dataclass
class StepInfo:
    loss: float
    v: np.ndarray
    jac_s: np.ndarray
    jac_theta: np.ndarray
    error: Optional[np.ndarray] = None


def initial_state(sys: System, s0, theta0, J0=None, inj: Optional[ErrorInjector] = None,
                  aux=None, t0: int = 0) -> LearnerState:
    s0 = np.asarray(s0, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    n, p = s0.shape[0], theta0.shape[0]
    if J0 is None:
        J0 = inj.initial_jacobian(n, p) if inj is not None else np.zeros((n, p))
    if as_matrix(J0).shape != (n, p):
        raise ContractViolationError(f"J0 has shape {as_matrix(J0).shape}, expected ({n}, {p})")
    return LearnerState(t0, s0, J0, theta0, aux)


def _check_estimate(J, t):
    if isinstance(J, RankOnePair):
        check_finite(J.v_state, 'jacobian_estimate', t)
        check_finite(J.v_param, 'jacobian_estimate', t)
    else:
        check_finite(J, 'jacobian_estimate', t)


def advance(sys: System, ls: LearnerState, eta: float, rule: UpdateRule, phi: ParamUpdateOp,
            inj: Optional[ErrorInjector] = None, rng=None) -> Tuple[LearnerState, StepInfo]:
    """rtrl_step that also returns the loss, raw gradient and Jacobians of the step"""
    if eta < 0:
        raise ContractViolationError(f"Step size must be >= 0, got {eta}")
    t = ls.t + 1
    s_new = step(sys, t, ls.s, ls.theta)

    jac_s = check_finite(np.atleast_2d(sys.d_transition_ds(t, ls.s, ls.theta)), 'jacobian', t)
    jac_theta = check_finite(np.atleast_2d(sys.d_transition_dtheta(t, ls.s, ls.theta)), 'jacobian', t)
    error = None
    if inj is None:
        J_new = jac_s @ as_matrix(ls.J) + jac_theta
    else:
        J_new, error = inj.propagate(t, ls.s, ls.theta, ls.J, jac_s, jac_theta, rng)
    _check_estimate(J_new, t)

    dl = np.asarray(sys.d_loss_ds(t, s_new), dtype=float)
    if isinstance(J_new, RankOnePair):
        v = J_new.left_multiply(dl)
    else:
        v = dl @ J_new
    check_finite(v, 'gradient', t)

    d_theta, aux_new = rule.step(t, v, s_new, ls.theta, ls.aux, eta)
    theta_new = check_finite(phi.apply(t, ls.theta, eta * d_theta), 'update', t)
    if aux_new is not None:
        check_finite(aux_new, 'statistic', t)

    info = StepInfo(float(sys.loss(t, s_new)), v, jac_s, jac_theta, error)
    return LearnerState(t, s_new, J_new, theta_new, aux_new), info


def rtrl_step(sys: System, ls: LearnerState, eta: float, rule: UpdateRule = None,
              phi: ParamUpdateOp = None, inj: Optional[ErrorInjector] = None, rng=None) -> LearnerState:
    """One step of (extended, imperfect) RTRL"""
    rule = rule or IdentityRule()
    phi = phi or PlainUpdate()
    return advance(sys, ls, eta, rule, phi, inj, rng)[0]


def open_loop_jacobian(sys: System, s0, theta, t: int, t_start: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """(s_t, J_t) at frozen theta from (t_start, s0) with J reset to 0"""
    s = np.asarray(s0, dtype=float)
    theta = np.asarray(theta, dtype=float)
    J = np.zeros((s.shape[0], theta.shape[0]))
    for k in range(t_start + 1, t_start + t + 1):
        jac_s = np.atleast_2d(sys.d_transition_ds(k, s, theta))
        jac_theta = np.atleast_2d(sys.d_transition_dtheta(k, s, theta))
        s = step(sys, k, s, theta)
        J = check_finite(jac_s @ J + jac_theta, 'jacobian_estimate', k)
    return s, J


def open_loop_gradient(sys: System, s0, theta, t: int, t_start: int = 0) -> np.ndarray:
    """dL_{t->}(s0, theta)/dtheta = dl_t/ds . J_t with J propagated at frozen theta"""
    if t < 1:
        raise ContractViolationError(f"open_loop_gradient needs t >= 1, got {t}")
    s, J = open_loop_jacobian(sys, s0, theta, t, t_start)
    return check_finite(np.asarray(sys.d_loss_ds(t_start + t, s), dtype=float) @ J, 'gradient', t_start + t)


def open_loop_gradients(sys: System, s0, theta, T: int, t_start: int = 0, with_states: bool = False):
    """Rows dL_{t_start -> t}/dtheta for t = t_start+1..t_start+T from a single forward pass.

    with_states also returns the states s_{t_start+1}..s_{t_start+T}.
    """
    s = np.asarray(s0, dtype=float)
    theta = np.asarray(theta, dtype=float)
    J = np.zeros((s.shape[0], theta.shape[0]))
    rows = np.zeros((T, theta.shape[0]))
    states = []
    for i, k in enumerate(range(t_start + 1, t_start + T + 1)):
        jac_s = np.atleast_2d(sys.d_transition_ds(k, s, theta))
        jac_theta = np.atleast_2d(sys.d_transition_dtheta(k, s, theta))
        s = step(sys, k, s, theta)
        J = check_finite(jac_s @ J + jac_theta, 'jacobian_estimate', k)
        rows[i] = np.asarray(sys.d_loss_ds(k, s), dtype=float) @ J
        if with_states:
            states.append(s)
    if with_states:
        return rows, states
    return rows


def run_learning(sys: System, s0, theta0, J0=None, schedule: StepSchedule = None,
                 rule: UpdateRule = None, phi: ParamUpdateOp = None, inj: Optional[ErrorInjector] = None,
                 T: int = 1, rng=None, theta_star=None, aux0=None, config_hash: str = '',
                 keep_states: bool = False, keep_gradients: bool = False,
                 diagnostics: Iterable[str] = ()) -> TrialRecord:
    """Run RTRL for T steps and record theta, loss and |v| at every step.

    A numeric overflow ends the run and is recorded as an abort at that
    time; it is not re-raised.
    """
    logger = Logger('rtrl')
    if T < 1:
        raise ContractViolationError(f"run_learning needs T >= 1, got {T}")
    if schedule is None:
        raise ContractViolationError("run_learning needs a step schedule")
    diagnostics = tuple(diagnostics)
    unknown = set(diagnostics) - set(DIAGNOSTICS)
    if unknown:
        raise ContractViolationError(f"Unknown diagnostics {sorted(unknown)}, expected a subset of {DIAGNOSTICS}")
    rule = rule or IdentityRule()
    phi = phi or PlainUpdate()
    rule.validate_schedule(schedule)
    if theta_star is None:
        theta_star = getattr(sys, 'theta_star', None)

    if aux0 is None:
        aux0 = rule.initial_aux(np.asarray(theta0).shape[0])
    ls = initial_state(sys, s0, theta0, J0, inj, aux0)
    record = TrialRecord(theta_star=None if theta_star is None else np.asarray(theta_star, dtype=float),
                         config_hash=config_hash, keep_gradients=keep_gradients)
    record.append(0, ls.theta)
    if keep_states:
        record.states.append(ls)

    for t in range(1, T + 1):
        try:
            J_prev = ls.J
            ls, info = advance(sys, ls, schedule.eta(t), rule, phi, inj, rng)
        except NumericOverflowError as e:
            logger.abort('Trial', e)
            record.abort(t if e.t is None else e.t, e.stage)
            break
        record.append(t, ls.theta, info.loss, info.v)
        if keep_states:
            record.states.append(ls)
        if 'error_norm' in diagnostics:
            record.add_diagnostic('error_norm', 0.0 if info.error is None else operator_norm(info.error))
        if 'gauge_bound' in diagnostics:
            record.add_diagnostic('gauge_bound', gauge_bound(info.jac_s, info.jac_theta, J_prev))
        if 'jacobian_norm' in diagnostics:
            record.add_diagnostic('jacobian_norm', operator_norm(ls.jacobian_matrix()))
    return record
