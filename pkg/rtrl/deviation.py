from typing import Dict, Sequence
import numpy as np
from dynamics.system import System, step
from rtrl.learner import LearnerState
from schedules.step_schedule import StepSchedule
from updates.param_ops import ParamUpdateOp, PlainUpdate
from updates.rules import IdentityRule, UpdateRule
from utils.errors import ContractViolationError


def _gradient(sys, t, s, J):
    return np.asarray(sys.d_loss_ds(t, s), dtype=float) @ J


def _advance_aux(aux_base, aux_prev, aux_new):
    """Apply to aux_base the same additive aux move that took aux_prev to aux_new"""
    if aux_new is None:
        return aux_base
    if aux_prev is None or aux_base is None:
        return aux_new
    return aux_base + (aux_new - aux_prev)


def _flatten(theta, aux):
    return theta if aux is None else np.concatenate([theta, np.ravel(aux)])


def deviation(sys: System, theta_anchor, states: Sequence[LearnerState], t0: int, t1: int,
              schedule: StepSchedule, rule: UpdateRule = None, phi: ParamUpdateOp = None,
              aux_anchor=None) -> float:
    """Distance at t1 between the parameters driven by `states` and by the regularized trajectory.

    From theta_anchor at t0, theta_t follows the recorded states (s_t, J_t).
    The regularized states restart from the recorded state at t0 and follow
    exact RTRL under theta_{t-1}; their gradients drive a second parameter
    sequence from the same anchor.
    """
    rule = rule or IdentityRule()
    phi = phi or PlainUpdate()
    if t1 < t0:
        raise ContractViolationError(f"deviation needs t0 <= t1, got t0={t0}, t1={t1}")
    by_time: Dict[int, LearnerState] = {ls.t: ls for ls in states}
    missing = [t for t in range(t0, t1 + 1) if t not in by_time]
    if missing:
        raise ContractViolationError(f"States do not cover [{t0}, {t1}]: missing t={missing[0]}")

    theta = np.array(theta_anchor, dtype=float)
    aux = by_time[t0].aux if aux_anchor is None else np.asarray(aux_anchor, dtype=float)
    theta_bar, aux_bar = theta.copy(), None if aux is None else np.array(aux, dtype=float)
    s_bar = np.array(by_time[t0].s, dtype=float)
    J_bar = np.array(by_time[t0].jacobian_matrix(), dtype=float)

    for t in range(t0 + 1, t1 + 1):
        eta = schedule.eta(t)
        recorded = by_time[t]

        # Regularized state under theta_{t-1}
        jac_s = np.atleast_2d(sys.d_transition_ds(t, s_bar, theta))
        jac_theta = np.atleast_2d(sys.d_transition_dtheta(t, s_bar, theta))
        s_bar = step(sys, t, s_bar, theta)
        J_bar = jac_s @ J_bar + jac_theta

        v = _gradient(sys, t, recorded.s, recorded.jacobian_matrix())
        v_bar = _gradient(sys, t, s_bar, J_bar)
        d_theta, aux_new = rule.step(t, v, recorded.s, theta, aux, eta)
        d_bar, aux_new_bar = rule.step(t, v_bar, s_bar, theta, aux, eta)

        theta_bar = phi.apply(t, theta_bar, eta * d_bar)
        aux_bar = _advance_aux(aux_bar, aux, aux_new_bar)
        theta = phi.apply(t, theta, eta * d_theta)
        aux = aux_new

    return float(np.linalg.norm(_flatten(theta, aux) - _flatten(theta_bar, aux_bar)))
