"""Open-loop updates at a frozen parameter and their Jacobians H_t.

For theta+ = (theta, aux) the open-loop update at time t is
U_t(dL_{0 -> t}(s0, theta)/dtheta, F_t(s0, theta), theta+). H_t is its
Jacobian in theta+, estimated by central finite differences; Lambda is the
time average of H_t.
"""
from dataclasses import dataclass, field
from typing import List
import numpy as np
from config import Config
from dynamics.system import System
from rtrl.learner import open_loop_gradients
from schedules.exponents import ergodic_exponent_estimate
from updates.rules import UpdateRule
from utils.errors import ContractViolationError
from utils.logger import Logger
from utils.numerics import check_finite


@dataclass
class LambdaReport:
    T: int
    a_hat: float
    r2: float
    flagged: bool
    reason: str = ''
    checkpoints: List[int] = field(default_factory=list)


def _split(sys, theta_plus):
    theta_plus = np.asarray(theta_plus, dtype=float)
    if theta_plus.shape[0] < sys.param_dim:
        raise ContractViolationError(
            f"theta+ has dimension {theta_plus.shape[0]}, system parameter needs {sys.param_dim}")
    return theta_plus, sys.param_dim


def open_loop_updates(sys: System, rule: UpdateRule, theta_plus, T: int, s0=None) -> np.ndarray:
    """Rows U_t(open-loop gradient at theta, F_t(s0, theta), theta+) for t = 1..T"""
    theta_plus, p = _split(sys, theta_plus)
    s0 = np.zeros(sys.state_dim(0)) if s0 is None else np.asarray(s0, dtype=float)
    grads, states = open_loop_gradients(sys, s0, theta_plus[:p], T, with_states=True)
    return np.array([rule.apply(t, grads[t - 1], states[t - 1], theta_plus) for t in range(1, T + 1)])


def extended_hessians_fd(sys: System, rule: UpdateRule, theta_plus, T: int, h: float = None,
                         s0=None) -> np.ndarray:
    """H_1..H_T as an array (T, p+, p+); one forward pass per perturbation"""
    h = Config.HESSIAN_FD_STEP if h is None else h
    if not h > 0:
        raise ContractViolationError(f"Finite-difference step must be > 0, got {h}")
    theta_plus, _ = _split(sys, theta_plus)
    dim = theta_plus.shape[0]
    H = np.zeros((T, dim, dim))
    for j in range(dim):
        shift = np.zeros(dim)
        shift[j] = h
        upper = open_loop_updates(sys, rule, theta_plus + shift, T, s0)
        lower = open_loop_updates(sys, rule, theta_plus - shift, T, s0)
        H[:, :, j] = (upper - lower) / (2.0 * h)
    return check_finite(H, 'hessian')


def extended_hessian_fd(sys: System, rule: UpdateRule, theta_plus, t: int, h: float = None,
                        s0=None) -> np.ndarray:
    """H_t(theta+) for a single t"""
    if t < 1:
        raise ContractViolationError(f"extended_hessian_fd needs t >= 1, got {t}")
    return extended_hessians_fd(sys, rule, theta_plus, t, h, s0)[-1]


def estimate_lambda(sys: System, rule: UpdateRule, theta_plus, T: int, h: float = None, s0=None,
                    min_T: int = 100):
    """(Lambda, LambdaReport): Lambda = mean of H_1..H_T.

    a_hat is fitted on the partial sums of H_t over the first quarter of the
    window, centered on the mean of the remaining three quarters. The
    full-window mean would force the partial sum at T to zero and pull the
    fit down. A fitted exponent near 1 means the partial averages do not
    settle; the report is flagged but nothing is raised.
    """
    if T < min_T:
        raise ContractViolationError(f"estimate_lambda needs T >= {min_T}, got {T}")
    H = extended_hessians_fd(sys, rule, theta_plus, T, h, s0)
    Lam = H.mean(axis=0)
    fitted = T // 4
    centre = H[fitted:].mean(axis=0)
    fit = ergodic_exponent_estimate((H[:fitted] - centre).reshape(fitted, -1), fitted)
    # Vanishing partial sums mean H_t is constant, which is not a failure here
    flagged = fit.a_hat >= Config.ERGODIC_FLAG_THRESHOLD
    reason = 'partial averages of H_t do not converge' if flagged else ''
    if flagged:
        Logger('updates').log(f"Lambda estimate flagged over T={T}: a_hat={fit.a_hat:.3f} ({reason})", 'WARNING')
    return Lam, LambdaReport(T, fit.a_hat, fit.r2, flagged, reason, fit.checkpoints)
