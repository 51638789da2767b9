from dataclasses import dataclass
from typing import List, Optional, Sequence
import numpy as np
from config import Config
from dynamics.system import System, run_trajectory
from utils.errors import ContractViolationError
from utils.logger import Logger
from utils.numerics import operator_norm


@dataclass
class HorizonCertificate:
    """Every product of k consecutive operators has norm <= 1 - alpha on the tested window"""
    k: int
    alpha: float
    max_product_norm: float
    window: int = 0


def _as_ops(ops) -> List[np.ndarray]:
    ops = [np.atleast_2d(np.asarray(A, dtype=float)) for A in ops]
    for t in range(1, len(ops)):
        if ops[t].shape[1] != ops[t - 1].shape[0]:
            raise ContractViolationError(
                f"Operator {t} has shape {ops[t].shape}, cannot follow shape {ops[t - 1].shape}")
    return ops


def product_norm_profile(ops: Sequence[np.ndarray], k_max: int = None) -> np.ndarray:
    """max_t |A_{t+k-1} ... A_t| for k = 1..k_max (NaN where the window is too short)"""
    k_max = Config.K_MAX if k_max is None else k_max
    ops = _as_ops(ops)
    profile = np.full(k_max, np.nan)
    products = list(ops)
    for k in range(1, k_max + 1):
        if not products:
            break
        profile[k - 1] = max(operator_norm(P) for P in products)
        # extend each window by the next operator; the last window has none
        products = [ops[t + k] @ products[t] for t in range(len(products) - 1)]
    return profile


def spectral_radius_horizon(ops: Sequence[np.ndarray], k_max: int = None) -> Optional[HorizonCertificate]:
    """Smallest horizon k <= k_max whose products all have norm < 1, or None"""
    profile = product_norm_profile(ops, k_max)
    for k, norm in enumerate(profile, start=1):
        if np.isfinite(norm) and norm < 1.0:
            return HorizonCertificate(k, 1.0 - float(norm), float(norm), len(ops))
    return None


def check_stability(sys: System, theta_star, s0_star=None, T: int = 200,
                    k_max: int = None) -> Optional[HorizonCertificate]:
    """Certify the state Jacobians along the target trajectory over t = 1..T.

    This is a sampled check on a finite window, not a proof for all t.
    Non-recurrent systems certify at k=1 with alpha=1.
    """
    logger = Logger('diagnostics')
    if not sys.recurrent:
        return HorizonCertificate(1, 1.0, 0.0, T)
    theta_star = np.asarray(theta_star, dtype=float)
    s0_star = np.zeros(sys.state_dim(0)) if s0_star is None else np.asarray(s0_star, dtype=float)
    trajectory = run_trajectory(sys, s0_star, theta_star, T)
    ops = [sys.d_transition_ds(t, trajectory.state_at(t - 1), theta_star) for t in range(1, T + 1)]
    certificate = spectral_radius_horizon(ops, k_max)
    if certificate is None:
        logger.log(f"No stability certificate up to k={Config.K_MAX if k_max is None else k_max} over T={T}",
                   'WARNING')
    else:
        logger.log(f"Stability certified at k={certificate.k}, alpha={certificate.alpha:.4g}")
    return certificate
