"""NoBackTrack and UORO reduction operators.

Both keep the Jacobian estimate as a RankOnePair and replace the exact
propagation jac_s J + jac_theta by a random rank-one pair whose expectation
over the sign vector is exactly that matrix.
"""
from typing import Callable, Tuple
import numpy as np
from approx.rank_one import RankOnePair, error_term, norm_equalize, sample_signs
from rtrl.injectors import ErrorInjector
from utils.errors import ConfigurationError, ContractViolationError

DEGENERATE_MODES = ('unit', 'drop')

Equalizer = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


def _check_shapes(pair, jac_s, jac_theta, signs):
    jac_s = np.atleast_2d(np.asarray(jac_s, dtype=float))
    jac_theta = np.atleast_2d(np.asarray(jac_theta, dtype=float))
    n_out = jac_theta.shape[0]
    if jac_s.shape != (n_out, pair.v_state.shape[0]):
        raise ContractViolationError(
            f"jac_s has shape {jac_s.shape}, expected ({n_out}, {pair.v_state.shape[0]})")
    if jac_theta.shape[1] != pair.v_param.shape[0]:
        raise ContractViolationError(
            f"jac_theta has {jac_theta.shape[1]} columns for a parameter of size {pair.v_param.shape[0]}")
    if np.asarray(signs).shape != (n_out,):
        raise ContractViolationError(f"Sign vector must have length {n_out}, got {np.asarray(signs).shape}")
    return jac_s, jac_theta


def _propagated_pair(pair, jac_s, equalize, degenerate):
    """rho(jac_s v_state, v_param), with rho := 1 on degenerate inputs in 'unit' mode"""
    moved = jac_s @ pair.v_state
    left, right = equalize(moved, pair.v_param)
    if degenerate == 'unit' and (not np.any(moved) or not np.any(pair.v_param)):
        return moved, np.array(pair.v_param, dtype=float)
    return left, right


def nbt_reduce(pair: RankOnePair, s, theta, jac_s, jac_theta, signs,
               equalize: Equalizer = norm_equalize, degenerate: str = 'unit') -> RankOnePair:
    """NoBackTrack: rho(jac_s v, w) + sum_i nu_i rho(e_i, row_i(jac_theta)), one equalization per row"""
    jac_s, jac_theta = _check_shapes(pair, jac_s, jac_theta, signs)
    left, right = _propagated_pair(pair, jac_s, equalize, degenerate)
    left = np.array(left, dtype=float)
    right = np.array(right, dtype=float)
    basis = np.eye(jac_theta.shape[0])
    for i, nu in enumerate(signs):
        e_i, row_i = equalize(basis[i], jac_theta[i])
        left += nu * e_i
        right += nu * row_i
    return RankOnePair(left, right)


def uoro_reduce(pair: RankOnePair, s, theta, jac_s, jac_theta, signs,
                equalize: Equalizer = norm_equalize, degenerate: str = 'unit') -> RankOnePair:
    """UORO: rho(jac_s v, w) + rho(sum_i nu_i e_i, sum_i nu_i row_i(jac_theta)), two equalizations"""
    jac_s, jac_theta = _check_shapes(pair, jac_s, jac_theta, signs)
    left, right = _propagated_pair(pair, jac_s, equalize, degenerate)
    signs = np.asarray(signs, dtype=float)
    noise_left, noise_right = equalize(signs, signs @ jac_theta)
    return RankOnePair(left + noise_left, right + noise_right)


REDUCERS = {'uoro': uoro_reduce, 'nobacktrack': nbt_reduce}


class ReductionInjector(ErrorInjector):
    """Imperfect RTRL whose errors come from a rank-one reduction"""

    def __init__(self, reducer: str = 'uoro', degenerate: str = 'unit'):
        if reducer not in REDUCERS:
            raise ConfigurationError(f"Unknown reducer '{reducer}', expected one of {tuple(REDUCERS)}")
        if degenerate not in DEGENERATE_MODES:
            raise ConfigurationError(f"Unknown degenerate mode '{degenerate}', expected one of {DEGENERATE_MODES}")
        self.name = reducer
        self.reduce = REDUCERS[reducer]
        self.degenerate = degenerate

    def initial_jacobian(self, n, p):
        return RankOnePair.zeros(n, p)

    def propagate(self, t, s_prev, theta_prev, J_prev, jac_s, jac_theta, rng):
        if not isinstance(J_prev, RankOnePair):
            J_prev = _as_pair(J_prev)
        signs = sample_signs(np.atleast_2d(jac_theta).shape[0], rng)
        J_new = self.reduce(J_prev, s_prev, theta_prev, jac_s, jac_theta, signs,
                            degenerate=self.degenerate)
        return J_new, error_term(J_new, J_prev, jac_s, jac_theta)

    def next_error(self, t, s_prev, theta_prev, J_prev, jac_s, jac_theta, rng):
        return self.propagate(t, s_prev, theta_prev, J_prev, jac_s, jac_theta, rng)[1]


def _as_pair(J) -> RankOnePair:
    """Rank-one factorization of a dense estimate (zero or rank one only)"""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if not np.any(J):
        return RankOnePair.zeros(*J.shape)
    u, sing, vt = np.linalg.svd(J, full_matrices=False)
    if sing.size > 1 and sing[1] > 1e-12 * sing[0]:
        raise ContractViolationError("Rank-one reducers need a rank-one initial Jacobian estimate")
    scale = np.sqrt(sing[0])
    return RankOnePair(scale * u[:, 0], scale * vt[0])
