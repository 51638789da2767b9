import threading
from typing import Callable, Optional
import numpy as np
from scipy.special import expit
from dynamics.losses import SampleLoss
from dynamics.system import System
from utils.errors import ConfigurationError


def _matrix(value, name):
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.ndim != 2:
        raise ConfigurationError(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


class RegressionSystem(System):
    """Non-recurrent regression: the state is the prediction s_t = x_t . theta.

    Loss (s_t - y_t)^2, so one RTRL step is exactly one SGD step.
    """

    recurrent = False

    def __init__(self, stream, theta_star: Optional[np.ndarray] = None):
        self.stream = stream
        self.param_dim = stream.input_dim
        self.theta_star = theta_star

    def state_dim(self, t):
        return 1

    def transition(self, t, s, theta):
        x, _ = self.stream.sample(t)
        return np.array([x @ theta])

    def d_transition_ds(self, t, s, theta):
        return np.zeros((1, s.shape[0]))

    def d_transition_dtheta(self, t, s, theta):
        x, _ = self.stream.sample(t)
        return np.asarray(x, dtype=float).reshape(1, -1)

    def loss(self, t, s):
        _, y = self.stream.sample(t)
        return float((s[0] - y) ** 2)

    def d_loss_ds(self, t, s):
        _, y = self.stream.sample(t)
        return np.array([2.0 * (s[0] - y)])

    def sample_gradient(self, t, theta):
        x, y = self.stream.sample(t)
        return 2.0 * (x @ theta - y) * x


class ParameterStateSystem(System):
    """Non-recurrent case where the state is the parameter itself: T_t(s, theta) = theta"""

    recurrent = False

    def __init__(self, sample_loss: SampleLoss, theta_star: Optional[np.ndarray] = None):
        self.sample_loss = sample_loss
        self.param_dim = sample_loss.param_dim
        self.theta_star = theta_star

    def state_dim(self, t):
        return self.param_dim

    def transition(self, t, s, theta):
        return np.array(theta, dtype=float)

    def d_transition_ds(self, t, s, theta):
        return np.zeros((self.param_dim, s.shape[0]))

    def d_transition_dtheta(self, t, s, theta):
        return np.eye(self.param_dim)

    def loss(self, t, s):
        return self.sample_loss.value(t, s)

    def d_loss_ds(self, t, s):
        return self.sample_loss.gradient(t, s)

    def sample_gradient(self, t, theta):
        return self.sample_loss.gradient(t, theta)


class MomentumSystem(System):
    """s_t = beta*s_{t-1} + (1-beta)*l(x_t, y_t, theta) with l_t(s) = s.

    RTRL on this system propagates J_t = beta*J_{t-1} + (1-beta)*d_theta l,
    which is the momentum variable of SGD with momentum.
    """

    def __init__(self, sample_loss: SampleLoss, beta: float, theta_star: Optional[np.ndarray] = None):
        if not 0.0 <= beta < 1.0:
            raise ConfigurationError(f"Momentum beta must lie in [0, 1), got {beta}")
        self.sample_loss = sample_loss
        self.beta = float(beta)
        self.param_dim = sample_loss.param_dim
        self.theta_star = theta_star

    def state_dim(self, t):
        return 1

    def transition(self, t, s, theta):
        return np.array([self.beta * s[0] + (1.0 - self.beta) * self.sample_loss.value(t, theta)])

    def d_transition_ds(self, t, s, theta):
        return np.array([[self.beta]])

    def d_transition_dtheta(self, t, s, theta):
        return ((1.0 - self.beta) * self.sample_loss.gradient(t, theta)).reshape(1, -1)

    def loss(self, t, s):
        return float(s[0])

    def d_loss_ds(self, t, s):
        return np.array([1.0])

    def sample_gradient(self, t, theta):
        return self.sample_loss.gradient(t, theta)


class LinearSystem(System):
    """s_t = A s_{t-1} + B theta + C x_t.

    loss is 'sum' (l_t(s) = sum of coordinates), 'squared'
    (0.5*|s - target|^2) or 'zero'. inputs maps t to x_t and is only needed
    when C is given.
    """

    LOSSES = ('sum', 'squared', 'zero')

    def __init__(self, A, B, C=None, inputs: Callable[[int], np.ndarray] = None,
                 loss: str = 'sum', target=None, theta_star=None):
        self.A = _matrix(A, 'A')
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ConfigurationError(f"A must be square, got shape {self.A.shape}")
        self.B = _matrix(B, 'B')
        if self.B.shape[0] != n:
            self.B = self.B.reshape(n, -1)
        self.C = None if C is None else _matrix(C, 'C').reshape(n, -1)
        if self.C is not None and inputs is None:
            raise ConfigurationError("LinearSystem with an input matrix C needs an inputs callable")
        if loss not in self.LOSSES:
            raise ConfigurationError(f"Unknown loss '{loss}' for linear system, expected one of {self.LOSSES}")
        self.inputs = inputs
        self.loss_kind = loss
        self.target = np.zeros(n) if target is None else np.asarray(target, dtype=float).reshape(n)
        self.n = n
        self.param_dim = self.B.shape[1]
        self.theta_star = theta_star

    def state_dim(self, t):
        return self.n

    def transition(self, t, s, theta):
        s_new = self.A @ s + self.B @ theta
        if self.C is not None:
            s_new = s_new + self.C @ np.asarray(self.inputs(t), dtype=float)
        return s_new

    def d_transition_ds(self, t, s, theta):
        return self.A.copy()

    def d_transition_dtheta(self, t, s, theta):
        return self.B.copy()

    def loss(self, t, s):
        if self.loss_kind == 'sum':
            return float(np.sum(s))
        if self.loss_kind == 'squared':
            return float(0.5 * np.sum((s - self.target) ** 2))
        return 0.0

    def d_loss_ds(self, t, s):
        if self.loss_kind == 'sum':
            return np.ones(self.n)
        if self.loss_kind == 'squared':
            return s - self.target
        return np.zeros(self.n)


class RNNSystem(System):
    """Simple RNN s_t = act(W s_{t-1} + W' x_t + b) with loss 0.5*|s_t - y_t|^2.

    theta packs W (n x n), W' (n x m) and b (n) row-major, in that order.
    stream.sample(t) supplies (x_t, y_t); targets may be None for loss-free use.
    """

    ACTIVATIONS = ('sigmoid', 'tanh')

    def __init__(self, n: int, m: int, stream, activation: str = 'sigmoid', theta_star=None):
        if activation not in self.ACTIVATIONS:
            raise ConfigurationError(f"Unknown activation '{activation}', expected one of {self.ACTIVATIONS}")
        self.n = n
        self.m = m
        self.stream = stream
        self.activation = activation
        self.param_dim = n * n + n * m + n
        self.theta_star = theta_star

    def unpack(self, theta):
        n, m = self.n, self.m
        W = theta[:n * n].reshape(n, n)
        W_in = theta[n * n:n * n + n * m].reshape(n, m)
        b = theta[n * n + n * m:]
        return W, W_in, b

    @staticmethod
    def pack(W, W_in, b):
        return np.concatenate([np.ravel(W), np.ravel(W_in), np.ravel(b)])

    def _preactivation(self, t, s, theta):
        W, W_in, b = self.unpack(theta)
        x, _ = self.stream.sample(t)
        return W @ s + W_in @ np.asarray(x, dtype=float) + b, np.asarray(x, dtype=float)

    def _act(self, z):
        return expit(z) if self.activation == 'sigmoid' else np.tanh(z)

    def _act_prime(self, z):
        if self.activation == 'sigmoid':
            sig = expit(z)
            return sig * (1.0 - sig)
        return 1.0 - np.tanh(z) ** 2

    def state_dim(self, t):
        return self.n

    def transition(self, t, s, theta):
        z, _ = self._preactivation(t, s, theta)
        return self._act(z)

    def d_transition_ds(self, t, s, theta):
        z, _ = self._preactivation(t, s, theta)
        W, _, _ = self.unpack(theta)
        return self._act_prime(z)[:, None] * W

    def d_transition_dtheta(self, t, s, theta):
        z, x = self._preactivation(t, s, theta)
        d = self._act_prime(z)
        eye = np.eye(self.n)
        d_W = (d[:, None, None] * eye[:, :, None] * s[None, None, :]).reshape(self.n, self.n * self.n)
        d_W_in = (d[:, None, None] * eye[:, :, None] * x[None, None, :]).reshape(self.n, self.n * self.m)
        return np.hstack([d_W, d_W_in, np.diag(d)])

    def loss(self, t, s):
        _, y = self.stream.sample(t)
        if y is None:
            return 0.0
        return float(0.5 * np.sum((s - y) ** 2))

    def d_loss_ds(self, t, s):
        _, y = self.stream.sample(t)
        if y is None:
            return np.zeros(self.n)
        return s - y


class TeacherStream:
    """Inputs from a base stream, targets = states of a reference RNN driven by them.

    Targets are a deterministic function of t, so the reference parameter
    reaches zero loss from s0 = 0. Each state depends on all earlier ones:
    they are computed in order and memoized, and the memo only grows under
    a lock.
    """

    def __init__(self, base_stream, n: int, m: int, theta_ref, activation='sigmoid'):
        self.base = base_stream
        self._cell = RNNSystem(n, m, self, activation)
        self._theta = np.asarray(theta_ref, dtype=float)
        self._states = [np.zeros(n)]
        self._lock = threading.Lock()
        self.input_dim = m

    def sample(self, t):
        x, _ = self.base.sample(t)
        if t >= len(self._states):
            W, W_in, b = self._cell.unpack(self._theta)
            with self._lock:
                while len(self._states) <= t:
                    x_k, _ = self.base.sample(len(self._states))
                    self._states.append(self._cell._act(W @ self._states[-1] + W_in @ x_k + b))
        return x, self._states[t]


class InfluenceBalancingSystem(System):
    """Linear chain where theta helps the loss now and hurts it later.

    s_t = A s_{t-1} + theta*(e_1 + e_n) with A = lam*I plus sub-diagonal
    links: the first n_plus links are +1, the remaining ones -1. theta reaches
    the last coordinate immediately with gain 1/(1-lam) > 0 and through the
    chain after n-1 steps with the sign of the link product; the chain term
    must dominate, so short truncations see the wrong gradient sign. Loss
    0.5*(s_n - target)^2.
    """

    def __init__(self, n: int = 6, n_plus: Optional[int] = None, lam: float = 0.2, target: float = 1.0):
        if n < 2:
            raise ConfigurationError(f"Influence balancing needs n >= 2 states, got {n}")
        if not 0.0 <= lam < 1.0:
            raise ConfigurationError(f"Chain decay lam must lie in [0, 1), got {lam}")
        if n_plus is None:
            n_plus = n - 2
        if not 0 <= n_plus <= n - 1:
            raise ConfigurationError(f"n_plus must lie in [0, {n - 1}], got {n_plus}")
        links = np.array([1.0] * n_plus + [-1.0] * (n - 1 - n_plus))
        self.A = lam * np.eye(n) + np.diag(links, k=-1)
        self.b = np.zeros(n)
        self.b[0] += 1.0
        self.b[-1] += 1.0
        self.n = n
        self.target = float(target)
        self.param_dim = 1
        self.gain = float(np.linalg.solve(np.eye(n) - self.A, self.b)[-1])
        if self.gain >= 0.0:
            raise ConfigurationError(
                f"Chain does not reverse the long-run influence (gain {self.gain:.4g}); "
                "use an odd number of negative links or a smaller lam")
        self.theta_star = np.array([self.target / self.gain])

    def state_dim(self, t):
        return self.n

    def transition(self, t, s, theta):
        return self.A @ s + self.b * theta[0]

    def d_transition_ds(self, t, s, theta):
        return self.A.copy()

    def d_transition_dtheta(self, t, s, theta):
        return self.b.reshape(-1, 1).copy()

    def loss(self, t, s):
        return float(0.5 * (s[-1] - self.target) ** 2)

    def d_loss_ds(self, t, s):
        grad = np.zeros(self.n)
        grad[-1] = s[-1] - self.target
        return grad


class ResetSystem(System):
    """Wraps a system so that every `period`-th transition returns s_reset.

    Reset transitions do not depend on the incoming state or the parameter,
    so both Jacobians vanish there; the loss at reset steps is counted as usual.
    """

    def __init__(self, base: System, period: int, s_reset):
        if period < 1:
            raise ConfigurationError(f"Reset period must be >= 1, got {period}")
        self.base = base
        self.period = int(period)
        self.s_reset = np.asarray(s_reset, dtype=float)
        self.param_dim = base.param_dim
        self.recurrent = base.recurrent
        self.theta_star = getattr(base, 'theta_star', None)

    def is_reset(self, t):
        return t % self.period == 0

    def state_dim(self, t):
        return self.base.state_dim(t)

    def transition(self, t, s, theta):
        if self.is_reset(t):
            return self.s_reset.copy()
        return self.base.transition(t, s, theta)

    def d_transition_ds(self, t, s, theta):
        if self.is_reset(t):
            return np.zeros((self.state_dim(t), s.shape[0]))
        return self.base.d_transition_ds(t, s, theta)

    def d_transition_dtheta(self, t, s, theta):
        if self.is_reset(t):
            return np.zeros((self.state_dim(t), self.param_dim))
        return self.base.d_transition_dtheta(t, s, theta)

    def loss(self, t, s):
        return self.base.loss(t, s)

    def d_loss_ds(self, t, s):
        return self.base.d_loss_ds(t, s)
