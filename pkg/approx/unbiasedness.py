"""Exhaustive unbiasedness check of the rank-one reducers.

Every sign vector (or sequence of sign vectors over several frozen-parameter
steps) is enumerated with equal weight, so the averages below are exact
expectations rather than Monte-Carlo estimates.
"""
from dataclasses import asdict, dataclass
from itertools import product
from typing import List, Optional
import numpy as np
import pandas as pd
from approx.rank_one import RankOnePair, error_term
from approx.reducers import DEGENERATE_MODES, REDUCERS
from config import Config
from dynamics.example_systems import LinearSystem
from dynamics.system import System, step
from utils.errors import BudgetError, ConfigurationError, ContractViolationError
from utils.files import write_csv_atomic
from utils.logger import Logger
from utils.rng import generator

REPORT_COLUMNS = ['reducer', 'dim', 'steps', 'max_bias', 'max_jacobian_dev', 'passed']


@dataclass
class UnbiasednessReport:
    reducer: str
    dim: int
    steps: int
    max_bias: float
    max_jacobian_dev: float
    passed: bool
    leaves: int = 0

    def to_row(self):
        row = asdict(self)
        row.pop('leaves')
        return row


def all_signs(dim: int) -> np.ndarray:
    """All 2^dim sign vectors, one per row"""
    return np.array(list(product((-1.0, 1.0), repeat=dim)))


def random_check_system(dim: int, p: int, seed: int = 0, radius: float = 0.9) -> LinearSystem:
    """Linear system with random A (operator norm `radius`) and random B"""
    rng = generator(seed)
    A = rng.standard_normal((dim, dim))
    A *= radius / np.linalg.norm(A, 2)
    return LinearSystem(A, rng.standard_normal((dim, p)))


def verify_unbiased(sys: System, theta, s0, reducer: str = 'uoro', steps: int = 1,
                    initial_pair: Optional[RankOnePair] = None, degenerate: str = 'unit',
                    seed: int = 0, tol: float = None) -> UnbiasednessReport:
    """Exact mean of E_t and of the Jacobian estimate over all sign sequences.

    theta is frozen for all steps. Without initial_pair a random rank-one
    estimate drawn from `seed` is used as J_0.
    """
    logger = Logger('approx')
    if reducer not in REDUCERS:
        raise ConfigurationError(f"Unknown reducer '{reducer}', expected one of {tuple(REDUCERS)}")
    if degenerate not in DEGENERATE_MODES:
        raise ConfigurationError(f"Unknown degenerate mode '{degenerate}', expected one of {DEGENERATE_MODES}")
    if steps < 1:
        raise ContractViolationError(f"verify_unbiased needs steps >= 1, got {steps}")
    tol = Config.UNBIASED_TOL if tol is None else tol
    reduce = REDUCERS[reducer]
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s0, dtype=float)

    dims = [sys.state_dim(t) for t in range(1, steps + 1)]
    leaves = 2 ** sum(dims)
    if leaves > Config.ENUMERATION_BUDGET:
        raise BudgetError(f"Enumerating {leaves} sign sequences exceeds the budget of {Config.ENUMERATION_BUDGET}")

    if initial_pair is None:
        rng = generator(seed)
        initial_pair = RankOnePair(rng.standard_normal(s.shape[0]), rng.standard_normal(theta.shape[0]))
    pairs: List[RankOnePair] = [initial_pair]
    J_exact = initial_pair.matrix()

    max_bias = 0.0
    max_dev = 0.0
    for t in range(1, steps + 1):
        jac_s = np.atleast_2d(sys.d_transition_ds(t, s, theta))
        jac_theta = np.atleast_2d(sys.d_transition_dtheta(t, s, theta))
        s = step(sys, t, s, theta)
        J_exact = jac_s @ J_exact + jac_theta

        signs = all_signs(dims[t - 1])
        next_pairs = []
        mean_error = np.zeros_like(J_exact)
        mean_estimate = np.zeros_like(J_exact)
        for pair in pairs:
            for nu in signs:
                new_pair = reduce(pair, s, theta, jac_s, jac_theta, nu, degenerate=degenerate)
                mean_error += error_term(new_pair, pair, jac_s, jac_theta)
                mean_estimate += new_pair.matrix()
                next_pairs.append(new_pair)
        count = len(next_pairs)
        max_bias = max(max_bias, float(np.max(np.abs(mean_error / count))))
        max_dev = max(max_dev, float(np.max(np.abs(mean_estimate / count - J_exact))))
        pairs = next_pairs

    passed = max_bias <= tol and max_dev <= tol
    logger.log(f"Unbiasedness check {reducer}, dim={dims[0]}, steps={steps}: "
               f"max_bias={max_bias:.3e}, max_jacobian_dev={max_dev:.3e}, passed={passed}")
    return UnbiasednessReport(reducer, dims[0], steps, max_bias, max_dev, passed, leaves)


def write_unbiased_report(reports: List[UnbiasednessReport], path) -> str:
    frame = pd.DataFrame([r.to_row() for r in reports], columns=REPORT_COLUMNS)
    return write_csv_atomic(frame, path)
