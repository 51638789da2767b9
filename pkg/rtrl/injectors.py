from typing import Tuple
import numpy as np


class ErrorInjector:
    """Source of the additive Jacobian errors E_t of imperfect RTRL.

    propagate() returns the new Jacobian estimate together with E_t; the
    default adds next_error() to the exact propagation.
    """

    name = 'error'

    def initial_jacobian(self, n: int, p: int):
        return np.zeros((n, p))

    def next_error(self, t, s_prev, theta_prev, J_prev, jac_s, jac_theta, rng) -> np.ndarray:
        raise NotImplementedError

    def propagate(self, t, s_prev, theta_prev, J_prev, jac_s, jac_theta, rng) -> Tuple[np.ndarray, np.ndarray]:
        E = self.next_error(t, s_prev, theta_prev, J_prev, jac_s, jac_theta, rng)
        return (jac_s @ J_prev + jac_theta) + E, E


class ZeroInjector(ErrorInjector):
    """E_t = 0: imperfect RTRL collapses to exact RTRL"""

    name = 'zero'

    def next_error(self, t, s_prev, theta_prev, J_prev, jac_s, jac_theta, rng):
        return np.zeros_like(jac_theta, dtype=float)


class GaussianInjector(ErrorInjector):
    """Centered Gaussian errors with entrywise standard deviation `scale`"""

    name = 'gaussian'

    def __init__(self, scale: float):
        self.scale = float(scale)

    def next_error(self, t, s_prev, theta_prev, J_prev, jac_s, jac_theta, rng):
        return self.scale * rng.standard_normal(jac_theta.shape)
