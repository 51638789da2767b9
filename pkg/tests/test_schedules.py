import math
from concurrent.futures import ThreadPoolExecutor
import numpy as np
import pytest
from schedules.exponents import (ExponentProfile, ergodic_exponent_estimate,
                                 moment_exponents, moment_rate_range, validate_exponents)
from schedules.samplers import IndexSequence, sampler
from schedules.step_schedule import StepSchedule, homogeneity_ratio, partial_sum
from utils.errors import ConfigurationError, ContractViolationError, DomainError
from utils.rng import generator


@pytest.mark.parametrize('cls, a, gamma, b, A, expected', [
    ('exact_rtrl', 0.1, 0.0, 0.3, None, True),
    ('exact_rtrl', 0.5, 0.0, 0.5, None, False),
    ('exact_rtrl', 0.2, 0.1, 0.5, None, True),
    ('exact_rtrl', 0.2, 0.1, 0.4, None, False),
    ('exact_rtrl', 0.0, 0.0, 1.0, None, True),
    ('exact_rtrl', 0.0, 0.0, 1.1, None, False),
    ('exact_rtrl', 1.0, 0.0, 0.5, None, False),
    ('imperfect_rtrl', 0.55, 0.0, 0.6, None, True),
    ('imperfect_rtrl', 0.55, 0.0, 0.5, None, False),
    ('imperfect_rtrl', 0.0, 0.0, 0.51, None, True),
    ('imperfect_rtrl', 0.0, 0.0, 0.5, None, False),
    ('imperfect_rtrl', 0.3, 0.1, 0.7, None, False),
    ('imperfect_rtrl', 0.3, 0.1, 0.85, None, True),
    ('tbptt', 0.2, 0.1, 0.7, 0.4, True),
    ('tbptt', 0.2, 0.1, 0.7, 0.55, False),
    ('tbptt', 0.2, 0.1, 0.7, 0.2, False),
    ('tbptt', 0.0, 0.0, 0.7, 0.4, True),
    ('tbptt', 0.0, 0.0, 0.7, None, False),
])
def test_exponent_truth_table(cls, a, gamma, b, A, expected):
    valid, violations = validate_exponents(ExponentProfile(a, gamma, cls, A), b)
    assert valid is expected
    assert bool(violations) is not expected


def test_violations_name_the_inequality():
    valid, violations = validate_exponents(ExponentProfile(0.55, 0.0, 'imperfect_rtrl'), 0.5)
    assert not valid
    assert any('1/2 + gamma' in v for v in violations)


def test_unknown_class_is_invalid():
    valid, violations = validate_exponents(ExponentProfile(0.0, 0.0, 'adjoint'), 0.5)
    assert not valid and 'unknown' in violations[0]


@pytest.mark.parametrize('h, b_min, empty', [
    (4.0, 1.0, True),
    (8.0, 0.75, False),
    (2.0, 2.0, True),
])
def test_moment_rate_range(h, b_min, empty):
    rate_range = moment_rate_range(h)
    assert rate_range.b_min == pytest.approx(b_min)
    assert rate_range.b_max == 1.0
    assert rate_range.empty is empty


def test_moment_rate_range_limit():
    assert moment_rate_range(1e9).b_min == pytest.approx(0.5, abs=1e-8)
    assert moment_exponents(8.0) == pytest.approx((0.5, 0.125))
    with pytest.raises(DomainError):
        moment_rate_range(1.5)


def test_cycling_sampler():
    indices = sampler('cycling', 3, None)
    assert [next(indices) for _ in range(7)] == [0, 1, 2, 0, 1, 2, 0]
    assert list(IndexSequence('cycling', 3).take(6)) == [0, 1, 2, 0, 1, 2]


def test_reshuffle_visits_every_sample_once_per_epoch():
    sequence = IndexSequence('reshuffle', 5, generator(3))
    epochs = sequence.take(25).reshape(5, 5)
    for epoch in epochs:
        assert sorted(epoch) == [0, 1, 2, 3, 4]


def test_index_sequence_is_access_order_independent():
    forward = IndexSequence('iid', 7, generator(9))
    backward = IndexSequence('iid', 7, generator(9))
    values = [forward(t) for t in range(1, 40)]
    assert [backward(t) for t in range(39, 0, -1)][::-1] == values
    assert all(0 <= i < 7 for i in values)


@pytest.mark.parametrize('scheme', ['iid', 'reshuffle'])
def test_index_sequence_shared_across_threads(scheme):
    shared = IndexSequence(scheme, 9, generator(6))
    expected = IndexSequence(scheme, 9, generator(6)).take(900)
    times = list(range(1, 901))
    orders = [times, times[::-1], times[1::2] + times[::2], times]
    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda order: {t: shared(t) for t in order}, orders))
    for out in results:
        assert [out[t] for t in times] == list(expected)


def test_sampler_errors():
    with pytest.raises(ContractViolationError):
        sampler('stratified', 3, None)
    with pytest.raises(ContractViolationError):
        IndexSequence('iid', 3, None)
    with pytest.raises(ContractViolationError):
        IndexSequence('cycling', 3)(0)


def test_cycling_epoch_sums_cancel():
    values = generator(4).standard_normal((8, 3))
    centered = values - values.mean(axis=0)
    indices = IndexSequence('cycling', 8).take(8 * 6)
    stream = centered[indices]
    epoch_sums = stream.reshape(6, 8, 3).sum(axis=1)
    assert np.max(np.abs(epoch_sums)) < 1e-12


def test_ergodic_exponent_cycling():
    values = generator(0).standard_normal((16, 2))
    centered = values - values.mean(axis=0)
    stream = centered[IndexSequence('cycling', 16).take(16_000)]
    report = ergodic_exponent_estimate(stream)
    assert report.a_hat <= 0.1
    assert not report.flagged
    assert len(report.checkpoints) >= 10


def test_ergodic_exponent_iid():
    # many coordinates so the partial-sum norm concentrates around sqrt(64 t)
    values = generator(2).choice([-1.0, 1.0], size=(20_000, 64))
    report = ergodic_exponent_estimate(values)
    assert 0.4 < report.a_hat < 0.65


def test_ergodic_exponent_iid_sampled_dataset():
    values = generator(5).standard_normal((64, 64))
    centered = values - values.mean(axis=0)
    stream = centered[IndexSequence('iid', 64, generator(8)).take(20_000)]
    report = ergodic_exponent_estimate(stream)
    assert 0.4 < report.a_hat < 0.7
    assert not report.flagged


def test_ergodic_exponent_flags_uncentered_values():
    report = ergodic_exponent_estimate(np.ones(1000))
    assert report.a_hat == pytest.approx(1.0, abs=0.01)
    assert report.flagged


def test_ergodic_exponent_degenerate_input():
    report = ergodic_exponent_estimate(np.zeros((500, 2)))
    assert report.a_hat == 0.0
    assert report.flagged
    with pytest.raises(ContractViolationError):
        ergodic_exponent_estimate(np.ones(5))


def test_step_schedule():
    schedule = StepSchedule(0.1, 0.5)
    assert schedule(1) == pytest.approx(0.1)
    assert schedule.eta(4) == pytest.approx(0.05)
    assert schedule.etas(1, 4) == pytest.approx([0.1, 0.1 / math.sqrt(2), 0.1 / math.sqrt(3), 0.05])
    with pytest.raises(ConfigurationError):
        StepSchedule(0.1, 0.0)
    with pytest.raises(ConfigurationError):
        StepSchedule(-1.0, 0.5)
    with pytest.raises(ConfigurationError):
        schedule.eta(0)


def test_partial_sums_grow_without_bound():
    harmonic = StepSchedule(1.0, 1.0)
    assert partial_sum(harmonic, 10_000) > partial_sum(harmonic, 100) + 4.0
    assert partial_sum(harmonic, 0) == 0.0


@pytest.mark.parametrize('T', [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
def test_homogeneity_ratio_tends_to_one(T):
    A, b = 0.4, 0.7
    ratio = homogeneity_ratio(StepSchedule(0.1, b), T, A)
    assert 1.0 <= ratio <= 1.0 + 5 * T ** (-(1 - A)) * b * 2
