from typing import Tuple
import numpy as np
import pandas as pd
from scipy import linalg
from scipy.integrate import quad_vec
from config import Config
from utils.errors import ContractViolationError, DomainError, NumericOverflowError
from utils.files import write_csv_atomic


def _square(matrix, name='matrix'):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[0] != matrix.shape[1]:
        raise ContractViolationError(f"{name} must be square, got shape {matrix.shape}")
    return matrix


def is_positive_stable(Lam, tol: float = None) -> Tuple[bool, float]:
    """(all eigenvalues have real part > tol, smallest real part)"""
    tol = Config.POSITIVE_STABLE_TOL if tol is None else tol
    Lam = _square(Lam, 'Lambda')
    try:
        eigenvalues = linalg.eigvals(Lam)
    except linalg.LinAlgError as e:
        raise NumericOverflowError('eigensolve', message=f"Eigensolver failed: {e}") from e
    min_real = float(np.min(eigenvalues.real))
    return min_real > tol, min_real


def lyapunov_residual(B, Lam) -> float:
    """|B Lambda + Lambda^T B - I| in operator norm"""
    return float(np.linalg.norm(B @ Lam + Lam.T @ B - np.eye(Lam.shape[0]), 2))


def solve_lyapunov(Lam) -> np.ndarray:
    """Symmetric positive definite B with B Lambda + Lambda^T B = I.

    Solved as the Kronecker system (Lambda^T (x) I + I (x) Lambda^T) vec(B) = vec(I).
    """
    Lam = _square(Lam, 'Lambda')
    stable, min_real = is_positive_stable(Lam)
    if not stable:
        raise DomainError(f"Lambda is not positive-stable (smallest real part {min_real:.4g})")
    p = Lam.shape[0]
    eye = np.eye(p)
    system = np.kron(Lam.T, eye) + np.kron(eye, Lam.T)
    B = linalg.solve(system, eye.ravel(order='F')).reshape(p, p, order='F')
    B = 0.5 * (B + B.T)

    residual = lyapunov_residual(B, Lam)
    if residual > Config.LYAPUNOV_RESIDUAL_TOL:
        raise NumericOverflowError('lyapunov', message=f"Lyapunov residual {residual:.3e} above tolerance")
    if np.min(linalg.eigvalsh(B)) <= 0.0:
        raise NumericOverflowError('lyapunov', message="Lyapunov solution is not positive definite")
    return B


def lyapunov_quadrature(Lam) -> np.ndarray:
    """B = int_0^inf exp(-t Lambda^T) exp(-t Lambda) dt by adaptive quadrature"""
    Lam = _square(Lam, 'Lambda')
    stable, min_real = is_positive_stable(Lam)
    if not stable:
        raise DomainError(f"Lambda is not positive-stable (smallest real part {min_real:.4g})")
    B, _ = quad_vec(lambda t: linalg.expm(-t * Lam.T) @ linalg.expm(-t * Lam), 0.0, np.inf,
                    epsabs=1e-12, epsrel=1e-10)
    return 0.5 * (B + B.T)


def export_matrix(matrix, path: str) -> str:
    """Write a matrix as CSV with numbered columns"""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    frame = pd.DataFrame(matrix, columns=[f"c{j}" for j in range(matrix.shape[1])])
    return write_csv_atomic(frame, path)
