from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple
import numpy as np
from sklearn.linear_model import LinearRegression
from config import Config
from utils.errors import ContractViolationError, DomainError

ALGORITHM_CLASSES = ('exact_rtrl', 'imperfect_rtrl', 'tbptt')

# Short names accepted on the command line
CLASS_ALIASES = {'exact': 'exact_rtrl', 'rtrl': 'exact_rtrl', 'imperfect': 'imperfect_rtrl',
                 'exact_rtrl': 'exact_rtrl', 'imperfect_rtrl': 'imperfect_rtrl', 'tbptt': 'tbptt'}


@dataclass(frozen=True)
class ExponentProfile:
    """Ergodic exponent a, loss-growth exponent gamma_loss and, for TBPTT, the truncation exponent A"""
    a: float
    gamma_loss: float
    algorithm_class: str = 'exact_rtrl'
    A: Optional[float] = None


@dataclass
class ErgodicReport:
    a_hat: float
    r2: float
    flagged: bool
    reason: str = ''
    checkpoints: List[int] = field(default_factory=list)


class RateRange(NamedTuple):
    b_min: float
    b_max: float
    empty: bool


def _fmt(x):
    return f"{x:.6g}"


def validate_exponents(profile: ExponentProfile, b: float) -> Tuple[bool, List[str]]:
    """Check the step-size exponent b against the constraints of the algorithm class"""
    violations = []
    a, g = profile.a, profile.gamma_loss
    cls = CLASS_ALIASES.get(profile.algorithm_class)
    if cls is None:
        return False, [f"unknown algorithm class '{profile.algorithm_class}', expected one of {ALGORITHM_CLASSES}"]

    if not 0.0 <= a < 1.0:
        violations.append(f"a = {_fmt(a)} must lie in [0, 1)")
    if not 0.0 <= g < 1.0:
        violations.append(f"gamma = {_fmt(g)} must lie in [0, 1)")
    if not 0.0 < b <= 1.0:
        violations.append(f"b = {_fmt(b)} must lie in (0, 1]")

    if cls == 'exact_rtrl':
        lhs = max(a, g) + 2 * g
        if not lhs < b:
            violations.append(f"max(a, gamma) + 2*gamma = {_fmt(lhs)} must be < b = {_fmt(b)}")
    elif cls == 'imperfect_rtrl':
        lhs = max(a, 0.5 + g) + 2 * g
        if not lhs < b:
            violations.append(f"max(a, 1/2 + gamma) + 2*gamma = {_fmt(lhs)} must be < b = {_fmt(b)}")
    else:
        A = profile.A
        if A is None:
            violations.append("tbptt needs a truncation exponent A")
        else:
            low, high = max(a, g), b - 2 * g
            if not low < A:
                violations.append(f"A = {_fmt(A)} must be > max(a, gamma) = {_fmt(low)}")
            if not A < high:
                violations.append(f"A = {_fmt(A)} must be < b - 2*gamma = {_fmt(high)}")
            if not 0.0 < A < 1.0:
                violations.append(f"A = {_fmt(A)} must lie in (0, 1)")
    return not violations, violations


def moment_rate_range(h: float) -> RateRange:
    """Admissible b for SGD when gradients have finite moments of order h"""
    if not h >= 2:
        raise DomainError(f"Moment order h must be >= 2, got {h}")
    b_min = max(0.5, 2.0 / h) + 2.0 / h
    return RateRange(b_min, 1.0, b_min >= 1.0)


def moment_exponents(h: float) -> Tuple[float, float]:
    """Infimum ergodic and loss-growth exponents (a, gamma) implied by moments of order h"""
    if not h >= 2:
        raise DomainError(f"Moment order h must be >= 2, got {h}")
    return max(0.5, 2.0 / h), 1.0 / h


def ergodic_exponent_estimate(values, T: Optional[int] = None, checkpoints: int = None) -> ErgodicReport:
    """Fit |sum_{t<=T'} values_t| ~ T'^a over log-spaced T' in [T/10, T].

    The fit uses the running maximum of the partial-sum norm, which has the
    same growth exponent and does not dip at cancellations. values must be
    centered; a slope near 1 means they were not and the report is flagged.
    """
    if checkpoints is None:
        checkpoints = Config.ERGODIC_CHECKPOINTS
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    arr = arr.reshape(arr.shape[0], -1)
    if T is None:
        T = arr.shape[0]
    if T < 10 or T > arr.shape[0]:
        raise ContractViolationError(f"Need 10 <= T <= {arr.shape[0]} values, got T={T}")

    norms = np.linalg.norm(np.cumsum(arr[:T], axis=0), axis=1)
    envelope = np.maximum.accumulate(norms)
    grid = np.unique(np.round(np.geomspace(max(1, T // 10), T, checkpoints)).astype(int))
    heights = envelope[grid - 1]
    keep = heights > 0
    if keep.sum() < 2:
        return ErgodicReport(0.0, 0.0, True, 'degenerate: partial sums vanish', grid.tolist())

    log_t = np.log(grid[keep]).reshape(-1, 1)
    log_h = np.log(heights[keep])
    model = LinearRegression().fit(log_t, log_h)
    a_hat = float(model.coef_[0])
    r2 = float(model.score(log_t, log_h)) if np.ptp(log_h) > 0 else 1.0
    flagged = a_hat >= Config.ERGODIC_FLAG_THRESHOLD
    reason = 'linear growth: values are not centered' if flagged else ''
    return ErgodicReport(a_hat, r2, flagged, reason, grid.tolist())
