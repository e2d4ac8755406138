# -*- coding: utf-8 -*-
"""
The beta-subset / max-violation sampling distribution.

A sample of beta constraints is drawn uniformly without replacement and the most
violated constraint in it is selected. Sorting the positive residual ascending,
the (beta+j)-th smallest entry is selected with probability
C(beta-1+j, beta-1) / C(m, beta), which gives the expected loss and gradient in closed form.
"""
from collections import namedtuple
from itertools import combinations

import numpy as np
from scipy.special import comb

from linfeas.data_utils import logger


# maximum number of subsets enumerated by the brute-force oracles
BRUTEFORCE_LIMIT = 10**6


class SamplingError(ValueError):
    """Invalid sample size or oversized enumeration."""


SampleSelection = namedtuple('SampleSelection', ['subset', 'chosen', 'violation'])
"""Sampled rows, the selected most violated row (None when all are satisfied) and its positive residual."""

SamplingWeights = namedtuple('SamplingWeights', ['beta', 'm', 'weights'])
"""Selection probability of the (beta+j)-th smallest residual for j = 0..m-beta."""


def make_rng(seed):
    """
    Build the counter-based generator used for every sampling decision.

    Parameters
    ----------
    seed : int
        64-bit seed.

    Returns
    -------
    numpy.random.Generator

    """
    return np.random.Generator(np.random.Philox(seed))


def _check_beta(m, beta):
    if not 1 <= beta <= m:
        raise SamplingError("sample size beta must satisfy 1 <= beta <= m (m={}), got {}".format(m, beta))


def sample_subset(m, beta, rng):
    """
    Draw beta distinct row indices uniformly over all C(m, beta) subsets.

    The full set is returned without consuming randomness when beta == m.

    Parameters
    ----------
    m : int
    beta : int
    rng : numpy.random.Generator

    Returns
    -------
    ndarray
        Sorted integer indices.

    """
    _check_beta(m, beta)
    if beta == m:
        return np.arange(m)
    return np.sort(rng.choice(m, size=beta, replace=False, shuffle=False))


def select_max_violated(problem, x, subset):
    """
    Select the most violated constraint of a sample.

    Ties are broken by the smallest row index.

    Parameters
    ----------
    problem : Problem
    x : ndarray
    subset : array_like
        Row indices.

    Returns
    -------
    SampleSelection

    """
    subset = np.sort(np.asarray(subset, dtype=np.intp))
    residuals = problem.row_residuals(x, subset)
    pos = int(np.argmax(residuals))
    if residuals[pos] <= 0:
        return SampleSelection(subset=subset, chosen=None, violation=0.0)
    return SampleSelection(subset=subset, chosen=int(subset[pos]), violation=float(residuals[pos]))


def sampling_weights(m, beta):
    """
    Weights of the sorted residual positions under the sampling distribution.

    Computed from the recurrence w_{j+1} = w_j (beta+j)/(j+1) in log space and
    normalized, so large m neither overflows nor needs factorials.

    Parameters
    ----------
    m : int
    beta : int

    Returns
    -------
    SamplingWeights

    """
    _check_beta(m, beta)
    j = np.arange(m - beta, dtype=np.float64)
    log_w = np.concatenate(([0.0], np.cumsum(np.log1p((beta - 1.0) / (j + 1.0)))))
    weights = np.exp(log_w - log_w[-1])
    weights /= weights.sum()
    return SamplingWeights(beta=beta, m=m, weights=weights)


def _ranked(problem, x, beta):
    """Positive residuals ranked ascending with ties ordered by descending row index."""
    x = problem.check_iterate(x)
    _check_beta(problem.m, beta)
    pos = np.maximum(problem.residual(x), 0.0)
    # lexsort sorts by the last key first
    order = np.lexsort((-np.arange(problem.m), pos))
    top = order[beta - 1:]
    return pos[top], top


def expected_loss_exact(problem, x, beta):
    """
    f(x) = E[1/2 ((a_i*^T x - b_i*)+)^2] under the sampling distribution.

    Parameters
    ----------
    problem : Problem
    x : array_like
    beta : int

    Returns
    -------
    float

    """
    values, _ = _ranked(problem, x, beta)
    weights = sampling_weights(problem.m, beta).weights
    return 0.5 * float(np.dot(weights, values ** 2))


def expected_gradient_exact(problem, x, beta):
    """
    grad f(x) = E[(a_i*^T x - b_i*)+ a_i*].

    Parameters
    ----------
    problem : Problem
    x : array_like
    beta : int

    Returns
    -------
    ndarray
        Vector of length n.

    """
    values, rows = _ranked(problem, x, beta)
    coef = sampling_weights(problem.m, beta).weights * values
    keep = coef > 0
    if not np.any(keep):
        return np.zeros(problem.n)
    return np.asarray(problem.A[rows[keep]].T @ coef[keep]).ravel()


def _subsets(m, beta):
    count = comb(m, beta, exact=True)
    if count > BRUTEFORCE_LIMIT:
        raise SamplingError("brute force needs {} subsets, limit is {}".format(count, BRUTEFORCE_LIMIT))
    logger.debug("Enumerating {} subsets of size {} from {} rows.".format(count, beta, m))
    return combinations(range(m), beta), count


def expected_loss_bruteforce(problem, x, beta):
    """
    Average of 1/2 max-positive-residual^2 over every subset of size beta.

    Parameters
    ----------
    problem : Problem
    x : array_like
    beta : int

    Returns
    -------
    float

    """
    x = problem.check_iterate(x)
    _check_beta(problem.m, beta)
    pos = np.maximum(problem.residual(x), 0.0)
    subsets, count = _subsets(problem.m, beta)
    total = 0.0
    for subset in subsets:
        total += pos[list(subset)].max() ** 2
    return 0.5 * total / count


def expected_gradient_bruteforce(problem, x, beta):
    """
    Average of the selected-row gradient (a_i*^T x - b_i*)+ a_i* over every subset of size beta.

    Uses select_max_violated, so ties follow the lowest-index rule.

    Parameters
    ----------
    problem : Problem
    x : array_like
    beta : int

    Returns
    -------
    ndarray

    """
    x = problem.check_iterate(x)
    _check_beta(problem.m, beta)
    subsets, count = _subsets(problem.m, beta)
    grad = np.zeros(problem.n)
    for subset in subsets:
        sel = select_max_violated(problem, x, subset)
        if sel.chosen is not None:
            grad += sel.violation * problem.row(sel.chosen)
    return grad / count
