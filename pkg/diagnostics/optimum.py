"""Checks that a candidate parameter is a local optimum of the extended algorithm.

Two parts: the time-averaged open-loop update at the candidate tends to 0,
and the time-averaged update Jacobian Lambda is positive-stable.
"""
from dataclasses import dataclass, field
from typing import List, Optional
import numpy as np
from config import Config
from dynamics.system import System
from schedules.exponents import ergodic_exponent_estimate
from updates.hessian import estimate_lambda, extended_hessians_fd, open_loop_updates
from updates.lyapunov import is_positive_stable
from updates.rules import UpdateRule
from utils.errors import ContractViolationError
from utils.logger import Logger
from utils.numerics import operator_norm


@dataclass
class OptimumReport:
    T: int
    avg_update_norm: float
    update_a_hat: float
    update_r2: float
    epoch_sum_norms: List[float]
    lambda_matrix: np.ndarray
    eigenvalues: np.ndarray
    min_real_part: float
    positive_stable: bool
    lambda_a_hat: float
    passed: bool
    reasons: List[str] = field(default_factory=list)


def local_optimum_report(sys: System, rule: UpdateRule, theta_candidate, T: int, s0=None,
                         epoch: Optional[int] = None, h: float = None) -> OptimumReport:
    """Average-update trend, Lambda and a pass/fail verdict at theta_candidate (theta or theta+)"""
    logger = Logger('diagnostics')
    if T < 100:
        raise ContractViolationError(f"local_optimum_report needs T >= 100, got {T}")
    updates = open_loop_updates(sys, rule, theta_candidate, T, s0)
    sums = np.cumsum(updates, axis=0)
    trend = ergodic_exponent_estimate(updates, T)
    epoch_sums = []
    if epoch:
        epoch_sums = [float(np.linalg.norm(sums[k - 1])) for k in range(epoch, T + 1, epoch)]

    Lam, lambda_fit = estimate_lambda(sys, rule, theta_candidate, T, h, s0)
    stable, min_real = is_positive_stable(Lam)
    eigenvalues = np.linalg.eigvals(Lam)

    reasons = []
    if trend.a_hat >= Config.OPTIMUM_RATE_THRESHOLD:
        reasons.append(f"average update does not vanish (partial sums grow like T^{trend.a_hat:.3f})")
    if not stable:
        reasons.append(f"Lambda is not positive-stable (smallest real part {min_real:.4g})")
    if lambda_fit.flagged:
        reasons.append(f"Lambda average does not settle (a_hat {lambda_fit.a_hat:.3f})")
    passed = not reasons
    logger.log(f"Local optimum check over T={T}: {'pass' if passed else 'fail'}"
               + ('' if passed else f" ({'; '.join(reasons)})"))
    return OptimumReport(T, float(np.linalg.norm(sums[-1]) / T), trend.a_hat, trend.r2, epoch_sums,
                         Lam, eigenvalues, min_real, stable, lambda_fit.a_hat, passed, reasons)


@dataclass
class ContinuityEstimate:
    """Largest |H_t(theta + delta) - H_t(theta)| seen over random |delta| = radius.

    A heuristic modulus of continuity; it does not certify equicontinuity.
    """
    radius: float
    modulus: float
    samples: int
    certifying: bool = False


def continuity_estimate(sys: System, rule: UpdateRule, theta_plus, radius: float, T: int,
                        rng: np.random.Generator, samples: int = 5, s0=None, h: float = None) -> ContinuityEstimate:
    if not radius > 0:
        raise ContractViolationError(f"Sampling radius must be > 0, got {radius}")
    theta_plus = np.asarray(theta_plus, dtype=float)
    base = extended_hessians_fd(sys, rule, theta_plus, T, h, s0)
    modulus = 0.0
    for _ in range(samples):
        delta = rng.standard_normal(theta_plus.shape[0])
        delta *= radius / np.linalg.norm(delta)
        moved = extended_hessians_fd(sys, rule, theta_plus + delta, T, h, s0)
        modulus = max(modulus, max(operator_norm(moved[t] - base[t]) for t in range(T)))
    return ContinuityEstimate(float(radius), float(modulus), samples)
