import numpy as np
import pytest
from dynamics.data import DatasetStream
from dynamics.example_systems import LinearSystem, RegressionSystem
from dynamics.factory import make_example
from dynamics.system import System
from schedules.samplers import IndexSequence


class AlternatingDimensionSystem(System):
    """State of dimension 1 at even t and 2 at odd t, two parameters"""

    param_dim = 2
    _TO_ODD = (np.array([[0.5], [-0.3]]), np.array([[1.0, 0.0], [0.5, 1.0]]))
    _TO_EVEN = (np.array([[0.4, 0.2]]), np.array([[0.3, -0.7]]))

    def state_dim(self, t):
        return 2 if t % 2 else 1

    def _maps(self, t):
        return self._TO_ODD if t % 2 else self._TO_EVEN

    def _z(self, t, s, theta):
        A, B = self._maps(t)
        return A @ s + B @ theta + 0.1

    def transition(self, t, s, theta):
        return np.tanh(self._z(t, s, theta))

    def d_transition_ds(self, t, s, theta):
        A, _ = self._maps(t)
        return (1.0 - np.tanh(self._z(t, s, theta)) ** 2)[:, None] * A

    def d_transition_dtheta(self, t, s, theta):
        _, B = self._maps(t)
        return (1.0 - np.tanh(self._z(t, s, theta)) ** 2)[:, None] * B

    def loss(self, t, s):
        return float(0.5 * np.sum(s ** 2))

    def d_loss_ds(self, t, s):
        return np.array(s, dtype=float)


@pytest.fixture
def scalar_system():
    """s' = 0.5 s + theta with loss l(s) = s"""
    return LinearSystem(0.5, 1.0)


@pytest.fixture
def single_sample_regression():
    """Prediction s = theta * x with x = 3 and target y = 4"""
    stream = DatasetStream(np.array([[3.0]]), np.array([4.0]), IndexSequence('cycling', 1))
    return RegressionSystem(stream)


@pytest.fixture
def regression_system():
    return make_example('regression', {'N': 16, 'p': 2, 'noise': 0.2, 'data_seed': 0})


@pytest.fixture
def alternating_system():
    return AlternatingDimensionSystem()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
