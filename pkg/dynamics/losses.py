from abc import ABC, abstractmethod
import numpy as np


class SampleLoss(ABC):
    """Per-sample loss l(x_t, y_t, theta) seen as a function of (t, theta)"""

    param_dim: int

    @abstractmethod
    def value(self, t: int, theta: np.ndarray) -> float:
        pass

    @abstractmethod
    def gradient(self, t: int, theta: np.ndarray) -> np.ndarray:
        pass


class SquaredLoss(SampleLoss):
    """(x_t . theta - y_t)^2 over a data stream"""

    def __init__(self, stream):
        self.stream = stream
        self.param_dim = stream.input_dim

    def value(self, t, theta):
        x, y = self.stream.sample(t)
        return float((x @ theta - y) ** 2)

    def gradient(self, t, theta):
        x, y = self.stream.sample(t)
        return 2.0 * (x @ theta - y) * x

    def hessian(self, t, theta):
        x, _ = self.stream.sample(t)
        return 2.0 * np.outer(x, x)


class PeriodicLinearLoss(SampleLoss):
    """l_t(theta) = C*theta on the first step of every period, -theta otherwise.

    The period average C - (period - 1) is positive whenever C > period - 1,
    so the constrained minimizer over [-1, 1] is theta = -1.
    """

    param_dim = 1

    def __init__(self, C: float = 3.0, period: int = 3):
        self.C = float(C)
        self.period = int(period)

    def slope(self, t: int) -> float:
        return self.C if (t - 1) % self.period == 0 else -1.0

    def value(self, t, theta):
        return float(self.slope(t) * theta[0])

    def gradient(self, t, theta):
        return np.array([self.slope(t)])
