# -*- coding: utf-8 -*-
import numpy as np
import pytest

from linfeas.data_utils import Problem
from linfeas.problems import GenSpec, gen_random, box_problem


@pytest.fixture
def gaussian_small():
    """100 x 20 consistent Gaussian instance with its witness."""
    spec = GenSpec(kind='gaussian', m=100, n=20, mix=0.5, seed=7)
    problem, x1, x2 = gen_random(spec)
    return problem, 0.5 * x1 + 0.5 * x2


@pytest.fixture
def box20():
    """[-1, 1]^20 as 40 inequalities, with its bounds."""
    lower, upper = -np.ones(20), np.ones(20)
    return box_problem(lower, upper), lower, upper


@pytest.fixture
def identity4():
    return Problem(np.eye(4), np.zeros(4), name='identity4')


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
