import numpy as np
from scipy.linalg import svdvals
from config import Config
from utils.errors import NumericOverflowError


def check_finite(values, stage, t=None, threshold=None):
    """Raise NumericOverflowError when values hold NaN/Inf or exceed the threshold"""
    if threshold is None:
        threshold = Config.OVERFLOW_THRESHOLD
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return values
    if not np.all(np.isfinite(arr)) or np.max(np.abs(arr)) > threshold:
        raise NumericOverflowError(stage, t)
    return values


def fd_jacobian(func, x, h=None):
    """Central finite-difference Jacobian of a vector (or scalar) valued func at x.

    Returns an array of shape (len(func(x)), len(x)); scalar outputs give a
    single row.
    """
    if h is None:
        h = Config.FD_STEP
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(func(x), dtype=float))
    jac = np.zeros((f0.size, x.size))
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = h
        f_plus = np.atleast_1d(np.asarray(func(x + step), dtype=float))
        f_minus = np.atleast_1d(np.asarray(func(x - step), dtype=float))
        jac[:, j] = (f_plus - f_minus) / (2.0 * h)
    return jac


def relative_error(analytic, reference):
    """Max-entry error scaled by max(1, max|reference|)"""
    analytic = np.asarray(analytic, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if analytic.size == 0:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(reference))))
    return float(np.max(np.abs(analytic - reference))) / scale


def operator_norm(matrix):
    """Largest singular value; 0 for empty matrices"""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0.0
    return float(svdvals(matrix)[0])
