from typing import Any, Dict, Optional, Tuple
import numpy as np
from dynamics.data import (DatasetStream, StreamingRegression, least_squares_optimum,
                           load_dataset_csv, regression_dataset)
from dynamics.example_systems import (InfluenceBalancingSystem, LinearSystem, MomentumSystem,
                                      ParameterStateSystem, RegressionSystem, ResetSystem,
                                      RNNSystem, TeacherStream)
from dynamics.losses import PeriodicLinearLoss, SampleLoss, SquaredLoss
from dynamics.system import System
from schedules.samplers import IndexSequence
from utils.errors import ConfigurationError
from utils.rng import draw_key, generator, keyed

KINDS = ('linear', 'regression', 'parameter_state', 'momentum', 'rnn',
         'influence_balancing', 'adam_counterexample')

# Sources a data-driven system can draw its samples from
DATA_SOURCES = ('dataset', 'streaming', 'periodic_linear')


def _dataset(params: Dict[str, Any]):
    if params.get('dataset_csv'):
        return load_dataset_csv(params['dataset_csv'])
    data_rng = generator(params.get('data_seed', 0))
    return regression_dataset(int(params.get('N', 16)), int(params.get('p', 2)),
                              float(params.get('noise', 0.2)), data_rng,
                              scale=float(params.get('input_scale', 2.0)))


def make_stream(params: Dict[str, Any], rng: Optional[np.random.Generator]):
    """Data stream plus its optimum (None when unknown) for a data-driven kind"""
    source = params.get('data', 'dataset')
    if source == 'dataset':
        X, Y = _dataset(params)
        indices = IndexSequence(params.get('sampling', 'cycling'), X.shape[0], rng)
        return DatasetStream(X, Y, indices), least_squares_optimum(X, Y)
    if source == 'streaming':
        if rng is None:
            raise ConfigurationError("Streaming data needs a random generator")
        stream = StreamingRegression(int(params.get('p', 2)), rng,
                                     noise_dof=params.get('noise_dof'),
                                     noise_scale=float(params.get('noise_scale', 0.5)))
        return stream, stream.coefficients.copy()
    raise ConfigurationError(f"Data source '{source}' has no stream, expected 'dataset' or 'streaming'")


def make_sample_loss(params: Dict[str, Any], rng: Optional[np.random.Generator]) -> Tuple[SampleLoss, Optional[np.ndarray]]:
    """Per-sample loss l(x_t, y_t, theta) and its minimizer"""
    source = params.get('data', 'dataset')
    if source not in DATA_SOURCES:
        raise ConfigurationError(f"Unknown data source '{source}', expected one of {DATA_SOURCES}")
    if source == 'periodic_linear':
        loss = PeriodicLinearLoss(float(params.get('C', 3.0)), int(params.get('period', 3)))
        if loss.C <= loss.period - 1:
            raise ConfigurationError(
                f"Periodic linear loss needs C > period - 1 for a minimizer at -1, got C={loss.C}")
        return loss, np.array([-1.0])
    stream, theta_star = make_stream(params, rng)
    return SquaredLoss(stream), theta_star


def _rnn(params, rng):
    n = int(params.get('n', 3))
    m = int(params.get('m', 1))
    activation = params.get('activation', 'sigmoid')
    data_rng = generator(params.get('data_seed', 0))
    N = int(params.get('N', 16))
    X = data_rng.standard_normal((N, m))
    base = DatasetStream(X, np.zeros(N), IndexSequence(params.get('sampling', 'cycling'), N, rng))

    # Reference parameter with a prescribed recurrent operator norm
    W = data_rng.standard_normal((n, n))
    W *= float(params.get('w_norm', 2.0)) / np.linalg.norm(W, 2)
    W_in = data_rng.standard_normal((n, m))
    b = 0.1 * data_rng.standard_normal(n)
    theta_ref = RNNSystem.pack(W, W_in, b)

    stream = TeacherStream(base, n, m, theta_ref, activation)
    return RNNSystem(n, m, stream, activation, theta_star=theta_ref)


def _linear(params, rng):
    C = params.get('C')
    inputs = None
    if C is not None:
        input_key = draw_key(generator(params.get('data_seed', 0)))
        width = np.atleast_2d(np.asarray(C, dtype=float)).shape[-1]

        def inputs(t):
            return keyed(input_key, t).standard_normal(width)
    system = LinearSystem(params.get('A', 0.5), params.get('B', 1.0), C, inputs,
                          loss=params.get('loss', 'sum'), target=params.get('target'))
    radius = max(abs(np.linalg.eigvals(system.A)))
    if radius >= 1.0 and not params.get('allow_unstable', False):
        raise ConfigurationError(
            f"Linear system has spectral radius {radius:.4g} >= 1; set allow_unstable to run it anyway")
    return system


def make_example(kind: str, params: Optional[Dict[str, Any]] = None,
                 rng: Optional[np.random.Generator] = None) -> System:
    """Build one of the shipped example systems from a parameter dict.

    rng drives sampling (reshuffle/iid) and streaming data; dataset contents
    come from params['data_seed'] so they are shared across trial seeds.
    params['reset_period'] wraps the result in a ResetSystem.
    """
    params = dict(params or {})
    if kind not in KINDS:
        raise ConfigurationError(f"Unknown system kind '{kind}', expected one of {KINDS}")

    if kind == 'linear':
        system = _linear(params, rng)
    elif kind == 'regression':
        if params.get('data', 'dataset') == 'periodic_linear':
            raise ConfigurationError("Regression systems need dataset or streaming data")
        stream, theta_star = make_stream(params, rng)
        system = RegressionSystem(stream, theta_star)
    elif kind == 'parameter_state':
        loss, theta_star = make_sample_loss(params, rng)
        system = ParameterStateSystem(loss, theta_star)
    elif kind == 'momentum':
        loss, theta_star = make_sample_loss(params, rng)
        system = MomentumSystem(loss, float(params.get('beta', 0.9)), theta_star)
    elif kind == 'adam_counterexample':
        loss = PeriodicLinearLoss(float(params.get('C', 3.0)), int(params.get('period', 3)))
        system = ParameterStateSystem(loss, np.array([-1.0]))
    elif kind == 'rnn':
        system = _rnn(params, rng)
    else:
        system = InfluenceBalancingSystem(int(params.get('n', 6)), params.get('n_plus'),
                                          float(params.get('lam', 0.2)), float(params.get('target', 1.0)))

    if params.get('reset_period'):
        s_reset = params.get('s_reset', np.zeros(system.state_dim(0)))
        system = ResetSystem(system, int(params['reset_period']), s_reset)
    return system


def initial_state(system: System, params: Optional[Dict[str, Any]] = None) -> np.ndarray:
    """s0 from params['s0'] or the zero state"""
    params = params or {}
    if params.get('s0') is not None:
        return np.asarray(params['s0'], dtype=float)
    return np.zeros(system.state_dim(0))
