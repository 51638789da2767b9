"""Extended update rules U_t.

A rule maps the raw RTRL gradient v = dl/ds . J to an update direction. Rules
with auxiliary statistics (the psi of adaptive methods) keep them outside the
parameter in LearnerState.aux; apply() exposes the combined direction over
theta+ = (theta, psi) for Hessian estimation.
"""
from typing import Callable, Optional, Tuple, Union
import numpy as np
from config import Config
from dynamics.example_systems import MomentumSystem
from dynamics.losses import SampleLoss
from utils.errors import ConfigurationError, NumericOverflowError
from utils.numerics import check_finite

TIMINGS = ('simultaneous', 'psi_first')
PRECONDITIONERS = ('rmsprop', 'rmsprop_sqrt', 'ong')


class UpdateRule:
    """Identity rule; subclasses override direction()"""

    name = 'identity'
    affine = True

    def aux_dim(self, p: int) -> int:
        return 0

    def initial_aux(self, p: int) -> Optional[np.ndarray]:
        return None

    def direction(self, t: int, v: np.ndarray, s: np.ndarray, theta: np.ndarray,
                  aux: Optional[np.ndarray] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """(direction on theta, direction on aux) before scaling by eta"""
        return np.array(v, dtype=float), None

    def step(self, t, v, s, theta, aux, eta) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Direction on theta and the updated aux for a step of size eta"""
        d_theta, d_aux = self.direction(t, v, s, theta, aux)
        if d_aux is None:
            return d_theta, aux
        return d_theta, aux - eta * d_aux

    def apply(self, t: int, v, s, theta_plus) -> np.ndarray:
        """Combined direction over theta+ = (theta, aux)"""
        theta_plus = np.asarray(theta_plus, dtype=float)
        p = np.asarray(v).shape[0]
        theta, aux = theta_plus[:p], theta_plus[p:]
        d_theta, d_aux = self.direction(t, np.asarray(v, dtype=float), s, theta,
                                        aux if aux.size else None)
        if d_aux is None:
            return d_theta
        return np.concatenate([d_theta, d_aux])

    def validate_schedule(self, schedule) -> None:
        pass


class IdentityRule(UpdateRule):
    pass


class PreconditionedRule(UpdateRule):
    """U(v) = P(theta) v for a fixed matrix or a matrix-valued function of theta"""

    name = 'preconditioned'

    def __init__(self, P: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]):
        if callable(P):
            self._P = P
            self._fixed = None
        else:
            self._fixed = self._checked(np.atleast_2d(np.asarray(P, dtype=float)))
            self._P = lambda theta: self._fixed

    @staticmethod
    def _checked(matrix, t=None):
        check_finite(matrix, 'preconditioner', t)
        if matrix.shape[0] == matrix.shape[1] and np.linalg.cond(matrix) > 1.0 / np.finfo(float).eps:
            raise NumericOverflowError('preconditioner', t, message=f"Preconditioner is singular (t={t})")
        return matrix

    def matrix(self, theta, t=None):
        if self._fixed is not None:
            return self._fixed
        return self._checked(np.atleast_2d(np.asarray(self._P(theta), dtype=float)), t)

    def direction(self, t, v, s, theta, aux=None):
        P = self.matrix(theta, t)
        return check_finite(P @ v, 'preconditioner', t), None


class SquaredGradientStatistic:
    """Psi = g (*) g with g the sample gradient, or v when no sample gradient is known"""

    full = False

    def __init__(self, gradient: Optional[Callable[[int, np.ndarray], np.ndarray]] = None):
        self.gradient = gradient

    def _g(self, t, v, theta):
        return np.asarray(v if self.gradient is None else self.gradient(t, theta), dtype=float)

    def __call__(self, t, v, theta):
        g = self._g(t, v, theta)
        return g * g


class OuterGradientStatistic(SquaredGradientStatistic):
    """Psi = g g^T, flattened row-major"""

    full = True

    def __call__(self, t, v, theta):
        g = self._g(t, v, theta)
        return np.outer(g, g).ravel()


class AdaptiveRule(UpdateRule):
    """psi-augmented preconditioning (RMSProp, online natural gradient).

    Direction over (theta, psi) is (P(theta, psi) v, c*psi - c*Psi_t(theta)),
    so a step of size eta gives psi_t = (1 - c*eta) psi_{t-1} + c*eta*Psi_t.
    With timing='psi_first' the statistic is refreshed before P is evaluated,
    which is the ordering of deployed RMSProp/Adam. fixed_beta replaces
    1 - c*eta by a constant.
    """

    affine = True

    def __init__(self, statistic, preconditioner: Union[str, Callable] = 'rmsprop',
                 c: float = 1.0, eps: float = None, timing: str = 'simultaneous',
                 fixed_beta: Optional[float] = None, psi0=None):
        if not c > 0:
            raise ConfigurationError(f"Adaptive inertia c must be > 0, got {c}")
        if timing not in TIMINGS:
            raise ConfigurationError(f"Unknown timing '{timing}', expected one of {TIMINGS}")
        if fixed_beta is not None and not 0.0 <= fixed_beta < 1.0:
            raise ConfigurationError(f"Fixed beta must lie in [0, 1), got {fixed_beta}")
        if isinstance(preconditioner, str) and preconditioner not in PRECONDITIONERS:
            raise ConfigurationError(f"Unknown preconditioner '{preconditioner}', expected one of {PRECONDITIONERS}")
        self.statistic = statistic
        self.preconditioner = preconditioner
        self.c = float(c)
        self.eps = Config.RMSPROP_EPSILON if eps is None else float(eps)
        self.timing = timing
        self.fixed_beta = fixed_beta
        self.psi0 = psi0
        self.name = preconditioner if isinstance(preconditioner, str) else 'adaptive'

    def aux_dim(self, p):
        return p * p if self.statistic.full else p

    def initial_aux(self, p):
        if self.psi0 is None:
            return None
        if isinstance(self.psi0, str) and self.psi0 == 'identity':
            return np.eye(p).ravel() if self.statistic.full else np.ones(p)
        return np.asarray(self.psi0, dtype=float).ravel()

    def matrix(self, theta, psi):
        """P(theta, psi) as a dense matrix"""
        p = theta.shape[0]
        if callable(self.preconditioner):
            return self.preconditioner(theta, psi)
        if self.preconditioner == 'rmsprop':
            return np.diag(1.0 / (psi + self.eps))
        if self.preconditioner == 'rmsprop_sqrt':
            return np.diag(1.0 / (np.sqrt(np.maximum(psi, 0.0)) + self.eps))
        return np.linalg.inv(psi.reshape(p, p) + self.eps * np.eye(p))

    def _precondition(self, theta, psi, v):
        if self.preconditioner == 'rmsprop':
            return v / (psi + self.eps)
        if self.preconditioner == 'rmsprop_sqrt':
            return v / (np.sqrt(np.maximum(psi, 0.0)) + self.eps)
        if self.preconditioner == 'ong':
            p = theta.shape[0]
            return np.linalg.solve(psi.reshape(p, p) + self.eps * np.eye(p), v)
        return self.preconditioner(theta, psi) @ v

    def direction(self, t, v, s, theta, aux=None):
        Psi = check_finite(self.statistic(t, v, theta), 'statistic', t)
        psi = Psi if aux is None else aux
        d_theta = self._precondition(theta, psi, v)
        return check_finite(d_theta, 'preconditioner', t), self.c * psi - self.c * Psi

    def step(self, t, v, s, theta, aux, eta):
        Psi = check_finite(self.statistic(t, v, theta), 'statistic', t)
        psi = Psi if aux is None else aux
        if self.fixed_beta is None:
            psi_new = psi - eta * (self.c * psi - self.c * Psi)
        else:
            psi_new = self.fixed_beta * psi + (1.0 - self.fixed_beta) * Psi
        psi_seen = psi_new if self.timing == 'psi_first' else psi
        d_theta = check_finite(self._precondition(theta, psi_seen, v), 'preconditioner', t)
        return d_theta, psi_new

    def validate_schedule(self, schedule):
        if self.fixed_beta is None and self.c * schedule.eta(1) > 1.0:
            raise ConfigurationError(
                f"c * eta_1 = {self.c * schedule.eta(1):.4g} exceeds 1, so beta_t = 1 - c*eta_t leaves [0, 1)")


def rule_identity() -> UpdateRule:
    return IdentityRule()


def rule_preconditioned(P) -> UpdateRule:
    return PreconditionedRule(P)


def rule_adaptive(statistic, P='rmsprop', c=1.0, eps=None, timing='simultaneous',
                  fixed_beta=None, psi0=None) -> AdaptiveRule:
    return AdaptiveRule(statistic, P, c, eps, timing, fixed_beta, psi0)


def rule_rmsprop(gradient=None, c=1.0, eps=None, timing='simultaneous', fixed_beta=None,
                 sqrt=False) -> AdaptiveRule:
    return AdaptiveRule(SquaredGradientStatistic(gradient), 'rmsprop_sqrt' if sqrt else 'rmsprop',
                        c, eps, timing, fixed_beta)


def rule_ong(gradient=None, c=1.0, eps=None, timing='simultaneous', psi0='identity') -> AdaptiveRule:
    return AdaptiveRule(OuterGradientStatistic(gradient), 'ong', c, eps, timing, None, psi0)


def rule_adam(sample_loss: SampleLoss, beta1: float, c: float = 1.0, eps: float = None,
              timing: str = 'psi_first', fixed_beta2: Optional[float] = None,
              preconditioner: str = 'rmsprop', theta_star=None) -> Tuple[MomentumSystem, AdaptiveRule]:
    """Adam as RTRL: the momentum system with beta1 plus RMSProp statistics on the sample gradient.

    Bias-correction factors are not applied.
    """
    if not 0.0 <= beta1 < 1.0:
        raise ConfigurationError(f"Adam beta1 must lie in [0, 1), got {beta1}")
    system = MomentumSystem(sample_loss, beta1, theta_star)
    rule = AdaptiveRule(SquaredGradientStatistic(sample_loss.gradient), preconditioner, c, eps,
                        timing, fixed_beta2)
    rule.name = 'adam'
    return system, rule


def make_rule(name: str, system=None, options: Optional[dict] = None) -> UpdateRule:
    """Rule from a config string: identity, precond:scalar:<alpha>, precond:matrix, rmsprop, ong"""
    options = options or {}
    gradient = getattr(system, 'sample_gradient', None)
    if name == 'identity':
        return rule_identity()
    if name.startswith('precond:'):
        kind = name.split(':', 1)[1]
        if kind.startswith('scalar:'):
            alpha = float(kind.split(':', 1)[1])
            return rule_preconditioned(alpha * np.eye(system.param_dim))
        if kind == 'matrix':
            if 'preconditioner' not in options:
                raise ConfigurationError("precond:matrix needs a 'preconditioner' matrix in the rule options")
            return rule_preconditioned(np.asarray(options['preconditioner'], dtype=float))
        raise ConfigurationError(f"Unknown preconditioner '{kind}', expected scalar:<alpha> or matrix")
    if name in ('rmsprop', 'rmsprop_sqrt'):
        return rule_rmsprop(gradient, options.get('c', 1.0), options.get('eps'),
                            options.get('timing', 'simultaneous'), options.get('fixed_beta'),
                            sqrt=name == 'rmsprop_sqrt')
    if name == 'ong':
        return rule_ong(gradient, options.get('c', 1.0), options.get('eps', 1e-4),
                        options.get('timing', 'simultaneous'), options.get('psi0', 'identity'))
    raise ConfigurationError(f"Unknown update rule '{name}'")
