from concurrent.futures import ThreadPoolExecutor
import numpy as np
import pandas as pd
import pytest
from dynamics.data import (DatasetStream, StreamingRegression, least_squares_optimum, load_dataset_csv,
                           regression_dataset)
from dynamics.example_systems import InfluenceBalancingSystem, LinearSystem, ResetSystem, RNNSystem
from dynamics.factory import KINDS, initial_state, make_example
from dynamics.system import compound_loss, run_trajectory, step, verify_jacobians
from schedules.samplers import IndexSequence
from utils.errors import ConfigurationError, ContractViolationError, NumericOverflowError
from utils.rng import generator


def test_step_scalar_linear(scalar_system):
    assert step(scalar_system, 1, [2.0], [1.0]) == pytest.approx([2.0])


def test_step_non_recurrent_ignores_state(single_sample_regression):
    for s in ([0.0], [-5.0], [100.0]):
        assert step(single_sample_regression, 1, s, [2.0]) == pytest.approx([6.0])


def test_rnn_cell_at_zero_input():
    stream = DatasetStream(np.array([[0.0]]), np.array([0.0]), IndexSequence('cycling', 1))
    rnn = RNNSystem(3, 1, stream)
    theta = RNNSystem.pack(np.zeros((3, 3)), np.ones((3, 1)), np.zeros(3))
    assert step(rnn, 1, np.array([0.3, -0.2, 0.9]), theta) == pytest.approx([0.5, 0.5, 0.5])


def test_step_rejects_bad_dimensions(scalar_system):
    with pytest.raises(ContractViolationError):
        step(scalar_system, 1, [1.0, 2.0], [1.0])
    with pytest.raises(ContractViolationError):
        step(scalar_system, 1, [1.0], [1.0, 2.0])


def test_step_overflow(scalar_system):
    with pytest.raises(NumericOverflowError) as info:
        step(scalar_system, 4, [1e13], [0.0])
    assert info.value.stage == 'transition'
    assert info.value.t == 4


def test_run_trajectory_geometric_sum(scalar_system):
    empty = run_trajectory(scalar_system, [0.0], [1.0], 0)
    assert len(empty) == 1 and empty.states[0] == pytest.approx([0.0])
    states = run_trajectory(scalar_system, [0.0], [1.0], 3).states
    assert np.concatenate(states) == pytest.approx([0.0, 1.0, 1.5, 1.75])


def test_run_trajectory_semigroup():
    system = make_example('rnn', {'n': 3, 'm': 2, 'N': 5, 'data_seed': 3})
    theta = generator(7).standard_normal(system.param_dim)
    s0 = np.full(3, 0.2)
    whole = run_trajectory(system, s0, theta, 9)
    head = run_trajectory(system, s0, theta, 4)
    tail = run_trajectory(system, head.states[-1], theta, 5, t_start=4)
    for t in range(4, 10):
        assert np.array_equal(whole.state_at(t), tail.state_at(t))


def test_compound_loss_examples(scalar_system, single_sample_regression):
    assert compound_loss(single_sample_regression, [0.0], [2.0], 1) == pytest.approx(4.0)
    assert compound_loss(scalar_system, [0.0], [1.0], 3) == pytest.approx(1.75)
    silent = LinearSystem(0.5, 1.0, loss='zero')
    for theta in (-3.0, 0.0, 8.0):
        assert compound_loss(silent, [1.0], [theta], 5) == 0.0
    with pytest.raises(ContractViolationError):
        compound_loss(scalar_system, [0.0], [1.0], 0)


def test_make_example_linear():
    system = make_example('linear', {'A': 0.5, 'B': 1.0, 'C': 0.0})
    assert step(system, 1, [2.0], [1.0]) == pytest.approx([2.0])


def test_make_example_rejects_unstable_linear():
    with pytest.raises(ConfigurationError):
        make_example('linear', {'A': 1.5})
    assert make_example('linear', {'A': 1.5, 'allow_unstable': True}).A[0, 0] == 1.5


def test_make_example_momentum_without_inertia():
    system = make_example('momentum', {'beta': 0.0, 'N': 4, 'p': 2})
    theta = np.array([0.3, -0.4])
    for t in (1, 2, 7):
        assert system.transition(t, np.array([5.0]), theta)[0] == pytest.approx(system.sample_loss.value(t, theta))


def test_influence_balancing_stays_bounded():
    system = make_example('influence_balancing', {'n': 6})
    trajectory = run_trajectory(system, np.zeros(6), [1.5], 10_000)
    assert max(np.linalg.norm(s) for s in trajectory.states) < 100.0
    # frozen-parameter steady state reaches the target exactly at theta*
    steady = np.linalg.solve(np.eye(6) - system.A, system.b * system.theta_star[0])
    assert steady[-1] == pytest.approx(system.target)


def test_influence_balancing_reverses_long_run_gain():
    system = InfluenceBalancingSystem(n=6, lam=0.2)
    assert system.gain < 0.0
    assert system.b[-1] > 0.0
    with pytest.raises(ConfigurationError):
        InfluenceBalancingSystem(n=6, n_plus=5)


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        make_example('lorenz', {})


@pytest.mark.parametrize('kind, params', [
    ('linear', {'A': [[0.5, 0.2], [0.0, 0.3]], 'B': [[1.0, 0.0], [0.5, 1.0]], 'loss': 'squared'}),
    ('regression', {'N': 8, 'p': 3}),
    ('parameter_state', {'N': 8, 'p': 3}),
    ('momentum', {'N': 8, 'p': 2, 'beta': 0.7}),
    ('rnn', {'n': 3, 'm': 2, 'activation': 'tanh'}),
    ('influence_balancing', {'n': 5, 'n_plus': 3}),
])
def test_analytic_jacobians_match_finite_differences(kind, params):
    system = make_example(kind, params)
    rng = generator(11)
    for t in (1, 2, 5):
        s = rng.uniform(-0.5, 0.5, system.state_dim(t - 1))
        theta = rng.standard_normal(system.param_dim)
        assert verify_jacobians(system, t, s, theta) < 1e-5


def test_reset_system_zeroes_jacobians():
    base = LinearSystem([[0.5, 0.1], [0.0, 0.4]], [[1.0], [1.0]])
    system = ResetSystem(base, period=3, s_reset=[1.0, -1.0])
    assert step(system, 3, np.array([4.0, 4.0]), [2.0]) == pytest.approx([1.0, -1.0])
    assert not np.any(system.d_transition_ds(3, np.ones(2), np.ones(1)))
    assert not np.any(system.d_transition_dtheta(6, np.ones(2), np.ones(1)))
    assert np.array_equal(system.d_transition_ds(4, np.ones(2), np.ones(1)), base.A)


def test_dataset_csv_round_trip(tmp_path):
    X, Y = regression_dataset(12, 3, 0.0, generator(0))
    frame = pd.DataFrame({'x0': X[:, 0], 'x1': X[:, 1], 'x2': X[:, 2], 'y': Y})
    path = tmp_path / 'data.csv'
    frame.to_csv(path, index=False)
    X_loaded, Y_loaded = load_dataset_csv(str(path))
    assert np.allclose(X_loaded, X)
    # noiseless targets recover the generating coefficients
    assert least_squares_optimum(X_loaded, Y_loaded) == pytest.approx([1 / 3, 2 / 3, 1.0])


def test_dataset_csv_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_dataset_csv(str(tmp_path / 'missing.csv'))
    path = tmp_path / 'bad.csv'
    pd.DataFrame({'a': [1.0], 'b': [2.0]}).to_csv(path, index=False)
    with pytest.raises(ConfigurationError):
        load_dataset_csv(str(path))


def test_regression_optimum_is_normal_equations(regression_system):
    X, Y = regression_system.stream.X, regression_system.stream.Y
    expected = np.linalg.solve(X.T @ X, X.T @ Y)
    assert regression_system.theta_star == pytest.approx(expected)


def test_streaming_regression_is_a_function_of_t():
    stream = StreamingRegression(3, generator(5), noise_dof=5.0)
    x5, y5 = stream.sample(5)
    x2, y2 = stream.sample(2)
    assert np.array_equal(stream.sample(5)[0], x5)
    assert stream.sample(2)[1] == y2
    with pytest.raises(ContractViolationError):
        stream.sample(0)


def _orders(T):
    times = list(range(1, T + 1))
    return [times, times[::-1], times[::3] + times[1::3] + times[2::3], times]


def _sample_from_threads(sample, T):
    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda order: {t: sample(t) for t in order}, _orders(T)))
    return results


def _same_sample(a, b):
    return all(np.array_equal(np.asarray(u, dtype=float), np.asarray(v, dtype=float)) for u, v in zip(a, b))


def test_streaming_regression_shared_across_threads():
    shared = StreamingRegression(3, generator(1), noise_dof=3.0)
    reference = StreamingRegression(3, generator(1), noise_dof=3.0)
    expected = {t: reference.sample(t) for t in range(1, 2001)}
    for out in _sample_from_threads(shared.sample, 2000):
        assert all(_same_sample(out[t], expected[t]) for t in expected)


def test_teacher_targets_shared_across_threads():
    params = {'n': 3, 'sampling': 'iid', 'N': 8}
    shared = make_example('rnn', params, generator(2)).stream
    reference = make_example('rnn', params, generator(2)).stream
    expected = {t: reference.sample(t) for t in range(1, 501)}
    for out in _sample_from_threads(shared.sample, 500):
        assert all(_same_sample(out[t], expected[t]) for t in expected)


def test_linear_inputs_shared_across_threads():
    params = {'A': 0.5, 'C': [[1.0, -1.0]], 'data_seed': 4}
    shared = make_example('linear', params)
    expected = {t: make_example('linear', params).inputs(t) for t in range(1, 501)}
    for out in _sample_from_threads(shared.inputs, 500):
        assert all(np.array_equal(out[t], expected[t]) for t in expected)
    assert not np.array_equal(expected[1], expected[2])


def test_initial_state():
    system = make_example('rnn', {'n': 4})
    assert np.array_equal(initial_state(system), np.zeros(4))
    assert np.array_equal(initial_state(system, {'s0': [1, 2, 3, 4]}), [1.0, 2.0, 3.0, 4.0])


def test_every_kind_is_constructible():
    for kind in KINDS:
        system = make_example(kind, {})
        assert system.param_dim >= 1
