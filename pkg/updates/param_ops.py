from abc import ABC, abstractmethod
import numpy as np
from utils.errors import ConfigurationError


class ParamUpdateOp(ABC):
    """Phi_t(theta, w) applied to the scaled direction w = eta_t * v_t"""

    @abstractmethod
    def apply(self, t: int, theta: np.ndarray, w: np.ndarray) -> np.ndarray:
        pass

    def __call__(self, t, theta, w):
        return self.apply(t, theta, w)


class PlainUpdate(ParamUpdateOp):
    def apply(self, t, theta, w):
        return theta - w


class ClippedUpdate(ParamUpdateOp):
    """theta - w / (1 + |w|): steps never exceed unit length"""

    def apply(self, t, theta, w):
        return theta - w / (1.0 + np.linalg.norm(w))


class ProjectedUpdate(ParamUpdateOp):
    """Plain step followed by projection onto the box [low, high]"""

    def __init__(self, low: float, high: float):
        if not low < high:
            raise ConfigurationError(f"Projection box needs low < high, got [{low}, {high}]")
        self.low = float(low)
        self.high = float(high)

    def apply(self, t, theta, w):
        return np.clip(theta - w, self.low, self.high)


def phi_plain() -> ParamUpdateOp:
    return PlainUpdate()


def phi_clipped() -> ParamUpdateOp:
    return ClippedUpdate()


def phi_projected(low: float = -1.0, high: float = 1.0) -> ParamUpdateOp:
    return ProjectedUpdate(low, high)


PARAM_OPS = {'plain': phi_plain, 'clipped': phi_clipped}


def make_param_op(option) -> ParamUpdateOp:
    """'plain', 'clipped' or {'projected': [low, high]}"""
    if isinstance(option, dict) and 'projected' in option:
        low, high = option['projected']
        return phi_projected(low, high)
    if option in PARAM_OPS:
        return PARAM_OPS[option]()
    raise ConfigurationError(f"Unknown parameter update '{option}', expected plain, clipped or projected")


def second_order_constant(op: ParamUpdateOp, theta, rng: np.random.Generator,
                          radius: float = 0.5, samples: int = 100) -> float:
    """Fitted C with |Phi(theta, w) - (theta - w)| <= C |w|^2 over random |w| <= radius"""
    theta = np.asarray(theta, dtype=float)
    worst = 0.0
    for _ in range(samples):
        direction = rng.standard_normal(theta.shape[0])
        w = direction / np.linalg.norm(direction) * radius * rng.uniform(0.01, 1.0)
        gap = np.linalg.norm(op.apply(0, theta, w) - (theta - w))
        worst = max(worst, gap / np.dot(w, w))
    return float(worst)
