# -*- coding: utf-8 -*-
from collections import Counter

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from linfeas.analysis import spectral_summary, convexity_bounds
from linfeas.data_utils import Problem, distance_to_box
from linfeas.sampling import (make_rng, sample_subset, select_max_violated, sampling_weights,
                              expected_loss_exact, expected_gradient_exact,
                              expected_loss_bruteforce, expected_gradient_bruteforce, SamplingError)


def test_sample_subset_full_set_consumes_nothing():
    rng = make_rng(5)
    assert_array_equal(sample_subset(5, 5, rng), np.arange(5))
    assert_array_equal(sample_subset(1, 1, rng), [0])
    assert rng.random() == make_rng(5).random()


def test_sample_subset_distinct_sorted():
    rng = make_rng(11)
    for _ in range(100):
        subset = sample_subset(50, 7, rng)
        assert subset.size == 7
        assert np.unique(subset).size == 7
        assert np.all(np.diff(subset) > 0)
        assert subset.min() >= 0 and subset.max() < 50


def test_sample_subset_uniform_over_pairs():
    rng = make_rng(2024)
    draws = 60000
    counts = Counter(tuple(sample_subset(4, 2, rng)) for _ in range(draws))
    assert len(counts) == 6
    for count in counts.values():
        assert abs(count / draws - 1.0 / 6) < 0.01


@pytest.mark.parametrize("m, beta", [(5, 0), (5, 6)])
def test_sample_subset_rejects_beta(m, beta):
    with pytest.raises(SamplingError):
        sample_subset(m, beta, make_rng(0))


def test_select_max_violated_cases(identity4):
    x = np.array([-1.0, 2.0, 0.5, 2.0])
    assert select_max_violated(identity4, x, [0]).chosen is None
    assert select_max_violated(identity4, x, [0]).violation == 0.0
    # tie on rows 3 and 1 goes to the lower index
    assert select_max_violated(identity4, x, [3, 1]).chosen == 1
    sel = select_max_violated(identity4, np.array([0.5, 3.0, 1.0, 0.0]), [0, 1, 2])
    assert sel.chosen == 1 and sel.violation == 3.0


def test_sampling_weights_examples():
    assert_allclose(sampling_weights(4, 2).weights, [1 / 6, 2 / 6, 3 / 6], rtol=1e-12)
    assert_allclose(sampling_weights(4, 1).weights, [0.25] * 4, rtol=1e-12)
    assert_allclose(sampling_weights(9, 9).weights, [1.0])


@pytest.mark.parametrize("m", [10, 100, 2000])
def test_sampling_weights_normalized_and_monotone(m):
    for beta in (1, 2, m // 2, m):
        weights = sampling_weights(m, beta).weights
        assert weights.size == m - beta + 1
        assert abs(weights.sum() - 1.0) <= 1e-12
        assert np.all(np.diff(weights) >= 0)


def test_expected_loss_examples(identity4):
    x = np.array([0.0, 1.0, 2.0, 3.0])
    assert expected_loss_exact(identity4, x, 2) == pytest.approx(3.0, rel=1e-12)
    assert expected_loss_exact(identity4, x, 4) == pytest.approx(4.5, rel=1e-12)
    assert expected_loss_exact(identity4, x, 1) == pytest.approx(1.75, rel=1e-12)


def test_expected_gradient_examples(identity4):
    x = np.array([0.0, 1.0, 2.0, 3.0])
    assert_allclose(expected_gradient_exact(identity4, x, 4), [0, 0, 0, 3.0], atol=1e-15)
    assert_allclose(expected_gradient_exact(identity4, x, 2), [0, 1 / 6, 2 / 3, 3 / 2], rtol=1e-12)
    assert_array_equal(expected_gradient_exact(identity4, -np.ones(4), 2), np.zeros(4))


def test_exact_loss_matches_bruteforce():
    rng = make_rng(99)
    for m in range(1, 9):
        problem = Problem(rng.standard_normal((m, 3)), rng.standard_normal(m))
        for beta in range(1, m + 1):
            for _ in range(20):
                x = rng.standard_normal(3)
                exact = expected_loss_exact(problem, x, beta)
                brute = expected_loss_bruteforce(problem, x, beta)
                assert abs(exact - brute) <= 1e-12 * max(1.0, abs(brute))


def test_exact_gradient_matches_bruteforce_with_ties():
    A = np.array([[1.0, 0.0], [2.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    b = np.array([0.0, 1.0, 0.0, 0.0, 0.5])
    problem = Problem(A, b)
    # rows 0, 1 and 2 share the residual 1
    x = np.array([1.0, 0.25])
    for beta in range(1, 6):
        assert_allclose(expected_gradient_exact(problem, x, beta),
                        expected_gradient_bruteforce(problem, x, beta), rtol=1e-12, atol=1e-14)


def test_bruteforce_reductions(identity4):
    x = np.array([0.5, -1.0, 2.0, 1.0])
    pos = np.maximum(x, 0)
    assert expected_loss_bruteforce(identity4, x, 4) == pytest.approx(0.5 * pos.max() ** 2)
    assert expected_loss_bruteforce(identity4, x, 1) == pytest.approx(0.5 * np.mean(pos ** 2))


def test_bruteforce_guard():
    problem = Problem(np.ones((40, 1)), np.zeros(40))
    with pytest.raises(SamplingError):
        expected_loss_bruteforce(problem, [1.0], 20)


def test_loss_monotone_in_beta():
    rng = make_rng(3)
    problem = Problem(rng.standard_normal((30, 5)), rng.standard_normal(30))
    for _ in range(20):
        x = rng.standard_normal(5)
        losses = [expected_loss_exact(problem, x, beta) for beta in range(1, 31)]
        assert np.all(np.diff(losses) >= -1e-12)


def test_gradient_matches_finite_differences():
    rng = make_rng(17)
    problem = Problem(rng.standard_normal((12, 4)), rng.standard_normal(12))
    checked = 0
    while checked < 10:
        x = 2 * rng.standard_normal(4)
        res = problem.residual(x)
        gaps = np.diff(np.sort(res))
        if np.min(np.abs(res)) < 1e-3 or np.min(gaps) < 1e-3:
            continue
        for beta in (1, 3, 12):
            grad = expected_gradient_exact(problem, x, beta)
            step = 1e-7
            fd = np.array([(expected_loss_exact(problem, x + step * e, beta) -
                            expected_loss_exact(problem, x - step * e, beta)) / (2 * step)
                           for e in np.eye(4)])
            assert_allclose(grad, fd, rtol=1e-5, atol=1e-7)
        checked += 1


def test_loss_sandwich_on_box(box20):
    problem, lower, upper = box20
    spectral = spectral_summary(problem)
    rng = make_rng(8)
    lower_failures = 0
    for beta in (1, problem.m // 2, problem.m):
        bounds = convexity_bounds(spectral, problem.m, beta, 1.0)
        for _ in range(100):
            x = 3 * rng.standard_normal(problem.n)
            d_sq = distance_to_box(lower, upper, x) ** 2
            f = expected_loss_exact(problem, x, beta)
            assert f <= bounds.mu2 / 2 * d_sq * (1 + 1e-12) + 1e-15
            lower_failures += f < bounds.mu1 / 2 * d_sq
    # mu1 is the lambda_min_plus / m surrogate, so the lower side is only reported
    print("lower sandwich failures with the surrogate mu1: {}".format(lower_failures))
