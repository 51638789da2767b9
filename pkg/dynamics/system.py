from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List
import numpy as np
from config import Config
from utils.errors import ContractViolationError, NumericOverflowError
from utils.numerics import check_finite, fd_jacobian, relative_error


class System(ABC):
    """Parameterized dynamical system s_t = T_t(s_{t-1}, theta) with losses l_t(s_t).

    Time indices start at 1 for transitions and losses; state_dim(0) is the
    dimension of the initial state. Implementations are immutable after
    construction.
    """

    param_dim: int
    recurrent: bool = True

    @abstractmethod
    def state_dim(self, t: int) -> int:
        pass

    @abstractmethod
    def transition(self, t: int, s: np.ndarray, theta: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def d_transition_ds(self, t: int, s: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Matrix state_dim(t) x state_dim(t-1)"""

    @abstractmethod
    def d_transition_dtheta(self, t: int, s: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Matrix state_dim(t) x param_dim"""

    @abstractmethod
    def loss(self, t: int, s: np.ndarray) -> float:
        pass

    @abstractmethod
    def d_loss_ds(self, t: int, s: np.ndarray) -> np.ndarray:
        """Row vector of length state_dim(t)"""


@dataclass
class Trajectory:
    """States s_{t0}..s_{t0+T} and the parameter used for each transition"""
    states: List[np.ndarray]
    parameters_used: List[np.ndarray] = field(default_factory=list)
    t_start: int = 0

    def state_at(self, t: int) -> np.ndarray:
        return self.states[t - self.t_start]

    def __len__(self):
        return len(self.states)


def _as_vector(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ContractViolationError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    return arr


def step(sys: System, t: int, s, theta) -> np.ndarray:
    """One transition s_t = T_t(s, theta)"""
    s = _as_vector(s, 'state')
    theta = _as_vector(theta, 'parameter')
    if s.shape[0] != sys.state_dim(t - 1):
        raise ContractViolationError(
            f"State at t={t - 1} has dimension {s.shape[0]}, system expects {sys.state_dim(t - 1)}")
    if theta.shape[0] != sys.param_dim:
        raise ContractViolationError(
            f"Parameter has dimension {theta.shape[0]}, system expects {sys.param_dim}")
    if not np.all(np.isfinite(theta)):
        raise ContractViolationError(f"Non-finite parameter passed to step at t={t}")
    s_new = np.asarray(sys.transition(t, s, theta), dtype=float)
    return check_finite(s_new, 'transition', t)


def run_trajectory(sys: System, s0, theta, T: int, t_start: int = 0) -> Trajectory:
    """Open-loop trajectory over t_start+1 .. t_start+T at a frozen parameter"""
    if T < 0:
        raise ContractViolationError(f"Horizon must be >= 0, got {T}")
    theta = _as_vector(theta, 'parameter')
    s = _as_vector(s0, 'state')
    states = [s]
    for t in range(t_start + 1, t_start + T + 1):
        s = step(sys, t, s, theta)
        states.append(s)
    return Trajectory(states=states, parameters_used=[theta] * T, t_start=t_start)


def compound_loss(sys: System, s0, theta, t: int) -> float:
    """L_{t->}(s0, theta) = l_t(F_t(s0, theta))"""
    if t < 1:
        raise ContractViolationError(f"compound_loss needs t >= 1, got {t}")
    trajectory = run_trajectory(sys, s0, theta, t)
    value = float(sys.loss(t, trajectory.states[-1]))
    if not np.isfinite(value):
        raise NumericOverflowError('loss', t)
    return value


def verify_jacobians(sys: System, t: int, s, theta, h: float = None) -> float:
    """Worst relative error of the analytic Jacobians against central differences"""
    if h is None:
        h = Config.FD_STEP
    s = _as_vector(s, 'state')
    theta = _as_vector(theta, 'parameter')
    s_next = np.asarray(sys.transition(t, s, theta), dtype=float)

    errors = [
        relative_error(sys.d_transition_ds(t, s, theta),
                       fd_jacobian(lambda x: sys.transition(t, x, theta), s, h).reshape(s_next.size, s.size)),
        relative_error(sys.d_transition_dtheta(t, s, theta),
                       fd_jacobian(lambda x: sys.transition(t, s, x), theta, h).reshape(s_next.size, theta.size)),
        relative_error(sys.d_loss_ds(t, s_next),
                       fd_jacobian(lambda x: sys.loss(t, x), s_next, h)[0]),
    ]
    return max(errors)
