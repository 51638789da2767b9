import math
from dataclasses import dataclass
import numpy as np
from utils.errors import ConfigurationError


@dataclass(frozen=True)
class StepSchedule:
    """eta_t = gamma * t^(-b) for t >= 1"""
    gamma: float
    b: float

    def __post_init__(self):
        if not (self.gamma >= 0.0 and math.isfinite(self.gamma)):
            raise ConfigurationError(f"Overall learning rate gamma must be finite and >= 0, got {self.gamma}")
        if not 0.0 < self.b <= 1.0:
            raise ConfigurationError(f"Step-size exponent b must lie in (0, 1], got {self.b}")

    def eta(self, t: int) -> float:
        if t < 1:
            raise ConfigurationError(f"Step sizes are defined for t >= 1, got {t}")
        return self.gamma * t ** (-self.b)

    def __call__(self, t: int) -> float:
        return self.eta(t)

    def etas(self, t_from: int, t_to: int) -> np.ndarray:
        """eta over t_from..t_to inclusive"""
        ts = np.arange(t_from, t_to + 1, dtype=float)
        return self.gamma * ts ** (-self.b)


def partial_sum(schedule: StepSchedule, T: int) -> float:
    """sum_{t<=T} eta_t; grows without bound for b <= 1"""
    if T < 1:
        return 0.0
    return float(np.sum(schedule.etas(1, T)))


def homogeneity_ratio(schedule: StepSchedule, T: int, A: float) -> float:
    """sup/inf of eta over the window (T, T + ceil(T^A)]"""
    window = int(math.ceil(T ** A))
    if schedule.gamma == 0.0:
        return 1.0
    return schedule.eta(T + 1) / schedule.eta(T + window)
