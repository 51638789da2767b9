from dataclasses import dataclass
from typing import Tuple, Union
import numpy as np
from utils.errors import ContractViolationError
from utils.numerics import operator_norm


@dataclass(frozen=True)
class RankOnePair:
    """Rank-one Jacobian estimate v_state (x) v_param.

    (lam*v_state, v_param/lam) represents the same matrix for any lam > 0.
    """
    v_state: np.ndarray
    v_param: np.ndarray

    @classmethod
    def zeros(cls, n: int, p: int) -> 'RankOnePair':
        return cls(np.zeros(n), np.zeros(p))

    @property
    def shape(self):
        return self.v_state.shape[0], self.v_param.shape[0]

    def matrix(self) -> np.ndarray:
        return np.outer(self.v_state, self.v_param)

    def norm(self) -> float:
        """Operator norm |v_state| |v_param|"""
        return float(np.linalg.norm(self.v_state) * np.linalg.norm(self.v_param))

    def left_multiply(self, row: np.ndarray) -> np.ndarray:
        """row . (v_state (x) v_param) without forming the matrix"""
        return float(row @ self.v_state) * self.v_param


JacobianEstimate = Union[np.ndarray, RankOnePair]


def as_matrix(J: JacobianEstimate) -> np.ndarray:
    return J.matrix() if isinstance(J, RankOnePair) else J


def norm_equalize(v1, v2) -> Tuple[np.ndarray, np.ndarray]:
    """Rescale (v1, v2) so both have norm sqrt(|v1| |v2|), keeping v1 (x) v2.

    Returns (0, 0) when either input is zero.
    """
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 == 0.0 or n2 == 0.0:
        return np.zeros_like(v1), np.zeros_like(v2)
    return np.sqrt(n2 / n1) * v1, np.sqrt(n1 / n2) * v2


def sample_signs(dim: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. uniform +-1 entries"""
    if dim < 1:
        raise ContractViolationError(f"Sign vector dimension must be >= 1, got {dim}")
    return 2.0 * rng.integers(0, 2, size=dim) - 1.0


def error_term(J_new, J_old, jac_s, jac_theta) -> np.ndarray:
    """E_t = J_new - jac_s J_old - jac_theta"""
    J_new = as_matrix(J_new)
    J_old = as_matrix(J_old)
    jac_s = np.atleast_2d(jac_s)
    jac_theta = np.atleast_2d(jac_theta)
    if jac_s.shape[1] != J_old.shape[0] or jac_s.shape[0] != J_new.shape[0] \
            or jac_theta.shape != J_new.shape or J_old.shape[1] != J_new.shape[1]:
        raise ContractViolationError(
            f"Non-conforming shapes: J_new {J_new.shape}, J_old {J_old.shape}, "
            f"jac_s {jac_s.shape}, jac_theta {jac_theta.shape}")
    return J_new - jac_s @ J_old - jac_theta


def gauge_bound(jac_s, jac_theta, J_old) -> float:
    """(2 dim S) y |J_old|^(1/2) + (dim S)^2 y with y = |[jac_s jac_theta]|"""
    dim = np.atleast_2d(jac_theta).shape[0]
    y = operator_norm(np.hstack([np.atleast_2d(jac_s), np.atleast_2d(jac_theta)]))
    J_norm = J_old.norm() if isinstance(J_old, RankOnePair) else operator_norm(J_old)
    return 2.0 * dim * y * np.sqrt(J_norm) + dim ** 2 * y
