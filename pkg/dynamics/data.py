import os
from typing import Tuple
import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression
from schedules.samplers import IndexSequence
from utils.errors import ConfigurationError, ContractViolationError
from utils.logger import Logger
from utils.rng import draw_key, keyed


def load_dataset_csv(path: str) -> Tuple[np.ndarray, np.ndarray]:
    """Load a dataset with one row per sample and columns x..., y...

    Columns whose name starts with 'x' form the inputs, those starting with
    'y' the targets. A single target column is returned as a 1-d array.
    """
    if not os.path.exists(path):
        raise ConfigurationError(f"Dataset file not found: {path}")
    frame = pd.read_csv(path)
    x_cols = [c for c in frame.columns if str(c).startswith('x')]
    y_cols = [c for c in frame.columns if str(c).startswith('y')]
    if not x_cols or not y_cols:
        raise ConfigurationError(f"Dataset {path} needs x... and y... columns, got {list(frame.columns)}")
    X = frame[x_cols].to_numpy(dtype=float)
    Y = frame[y_cols].to_numpy(dtype=float)
    if Y.shape[1] == 1:
        Y = Y[:, 0]
    Logger('dynamics').debug(f"Loaded dataset {path}: {X.shape[0]} samples, {X.shape[1]} inputs")
    return X, Y


def regression_dataset(N: int, p: int, noise: float, rng: np.random.Generator,
                       scale: float = 2.0) -> Tuple[np.ndarray, np.ndarray]:
    """Inputs uniform on [-scale, scale]^p, targets X @ (1..p)/p plus Gaussian noise"""
    X = rng.uniform(-scale, scale, size=(N, p))
    coefficients = np.arange(1, p + 1, dtype=float) / p
    Y = X @ coefficients + noise * rng.standard_normal(N)
    return X, Y


def least_squares_optimum(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Minimizer of the dataset-average squared loss (normal equations)"""
    model = LinearRegression(fit_intercept=False)
    model.fit(X, Y)
    return np.asarray(model.coef_, dtype=float).reshape(-1)


class DatasetStream:
    """Samples (x_t, y_t) = dataset[i_t] for a finite in-memory dataset"""

    def __init__(self, X, Y, indices: IndexSequence):
        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        self.Y = np.asarray(Y, dtype=float)
        if self.Y.shape[0] != self.X.shape[0]:
            raise ContractViolationError(
                f"Dataset has {self.X.shape[0]} inputs but {self.Y.shape[0]} targets")
        if indices.N != self.X.shape[0]:
            raise ContractViolationError(
                f"Index sequence over {indices.N} samples for a dataset of {self.X.shape[0]}")
        self.indices = indices
        self.N = self.X.shape[0]
        self.input_dim = self.X.shape[1]

    def sample(self, t: int):
        i = self.indices(t)
        return self.X[i], self.Y[i]


class StreamingRegression:
    """Pure-online stream: fresh x_t ~ N(0, I) and y_t = x_t . beta + noise every step.

    Noise is Student-t with noise_dof degrees of freedom (finite moments of
    order below the dof), or Gaussian when noise_dof is None. Sample t is
    drawn from a Philox generator keyed by the stream and positioned at t,
    so sample(t) is a function of t and the stream holds no mutable state.
    """

    def __init__(self, p: int, rng: np.random.Generator, noise_dof: float = None,
                 noise_scale: float = 0.5):
        self.input_dim = p
        self.coefficients = np.arange(1, p + 1, dtype=float) / p
        self.noise_dof = noise_dof
        self.noise_scale = noise_scale
        self._key = draw_key(rng)

    def sample(self, t: int):
        if t < 1:
            raise ContractViolationError(f"Samples start at t=1, got {t}")
        g = keyed(self._key, t)
        x = g.standard_normal(self.input_dim)
        noise = g.standard_normal() if self.noise_dof is None else g.standard_t(self.noise_dof)
        return x, float(x @ self.coefficients + self.noise_scale * noise)
