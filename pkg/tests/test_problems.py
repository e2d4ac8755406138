# -*- coding: utf-8 -*-
import os
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import io as spio
from scipy import sparse

from linfeas.data_utils import Problem, ProblemError, positive_residual
from linfeas.problems import (GenSpec, gen_random, witness, svm_to_feasibility, load_breast_cancer_problem,
                              box_problem, LpInstance, lp_to_feasibility, write_vector, read_vector,
                              save_problem, load_problem, ParseError)


@pytest.mark.parametrize("kind", ['gaussian', 'correlated'])
def test_gen_random_is_consistent(kind):
    spec = GenSpec(kind=kind, m=200, n=30, mix=0.3, seed=4)
    problem, x1, x2 = gen_random(spec)
    assert problem.shape == (200, 30)
    point = witness(spec, x1, x2)
    assert positive_residual(problem, point).norm2 <= 1e-10
    assert_allclose(point, 0.3 * x1 + 0.7 * x2)


def test_gen_random_mix_one_is_exact():
    spec = GenSpec(m=50, n=10, mix=1.0, seed=2)
    problem, x1, _ = gen_random(spec)
    assert_array_equal(problem.b, problem.A @ x1)


def test_gen_random_correlated_range():
    problem, x1, x2 = gen_random(GenSpec(kind='correlated', m=100, n=20, seed=1, low=0.9, high=1.0))
    A = problem.dense()
    assert A.min() >= 0.9 and A.max() < 1.0
    assert x1.min() >= 0.9 and x2.max() < 1.0


def test_gen_random_is_deterministic():
    spec = GenSpec(m=60, n=12, seed=99)
    first, second = gen_random(spec), gen_random(GenSpec.from_dict(spec.to_dict()))
    assert_array_equal(first[0].A, second[0].A)
    assert_array_equal(first[0].b, second[0].b)
    assert first[0].name == 'gaussian-60x12-s99'
    assert not np.array_equal(first[0].A, gen_random(GenSpec(m=60, n=12, seed=100))[0].A)


@pytest.mark.parametrize("params", [dict(kind='uniform'), dict(m=0), dict(mix=1.5), dict(low=1.0, high=0.5)])
def test_gen_spec_validation(params):
    with pytest.raises(ProblemError):
        GenSpec(**params)


def test_svm_transform_one_dimensional():
    problem = svm_to_feasibility([[2.0], [-1.0]], [1, -1])
    assert_array_equal(problem.dense(), [[-2.0], [-1.0]])
    assert_array_equal(problem.b, [0.0, 0.0])
    # w = 1 separates the two points
    assert positive_residual(problem, [1.0]).fsc == 1.0
    assert positive_residual(problem, [-1.0]).fsc == 0.0


def test_svm_label_flip_negates_rows(rng):
    X = rng.standard_normal((10, 3))
    y = np.where(rng.random(10) < 0.5, -1.0, 1.0)
    plain, flipped = svm_to_feasibility(X, y), svm_to_feasibility(X, -y)
    assert_array_equal(plain.dense(), -flipped.dense())


def test_svm_transform_errors():
    with pytest.raises(ProblemError):
        svm_to_feasibility([[1.0], [2.0]], [1, 0])
    with pytest.raises(ProblemError):
        svm_to_feasibility([[1.0], [2.0]], [1])


def test_breast_cancer_problem():
    problem = load_breast_cancer_problem()
    assert problem.shape == (569, 30)
    assert_array_equal(problem.b, np.zeros(569))
    assert problem.name == 'breast_cancer'


def test_box_problem(box20):
    problem, lower, upper = box20
    assert problem.shape == (40, 20)
    assert problem.is_sparse
    assert positive_residual(problem, np.zeros(20)).theta == 0.0
    x = np.zeros(20)
    x[3], x[7] = 3.0, -2.5
    assert positive_residual(problem, x).norm2 == pytest.approx(np.hypot(2.0, 1.5))
    with pytest.raises(ProblemError):
        box_problem([1.0], [0.0])


@pytest.fixture
def small_lp():
    return LpInstance(c=[1.0, 0.0, 1.0], A_eq=[[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]], b_eq=[1.0, 1.0],
                      l=[0.0, 0.0, 0.0], u=[1.0, 1.0, 1.0], p_star=0.0, x_star=[0.0, 1.0, 0.0])


def test_lp_transform(small_lp):
    problem = lp_to_feasibility(small_lp)
    assert problem.shape == (11, 3)
    assert positive_residual(problem, small_lp.x_star).norm2 == 0.0
    # an equality-feasible point that is not optimal violates c^T x <= p*
    summary = positive_residual(problem, [1.0, 0.0, 1.0])
    assert summary.theta == pytest.approx(2.0)
    assert summary.fsc == pytest.approx(10 / 11)


def test_lp_transform_drops_infinite_bounds():
    lp = LpInstance(c=[1.0, 1.0], A_eq=[[1.0, -1.0]], b_eq=[0.0], l=[0.0, -np.inf], u=[np.inf, np.inf], p_star=0.0)
    problem = lp_to_feasibility(lp)
    assert problem.shape == (4, 2)
    assert_array_equal(problem.b, [0.0, 0.0, 0.0, 0.0])


def test_lp_transform_needs_optimal_value(small_lp):
    small_lp.p_star = None
    with pytest.raises(ProblemError):
        lp_to_feasibility(small_lp)
    with pytest.raises(ProblemError):
        LpInstance(c=[1.0], A_eq=[[1.0, 1.0]], b_eq=[1.0], l=[0.0, 0.0], u=[1.0, 1.0])


def test_lp_from_manifest(tmpdir, small_lp):
    base = str(tmpdir)
    spio.mmwrite(os.path.join(base, 'a_eq.mtx'), sparse.coo_matrix(small_lp.A_eq))
    for key in ('b_eq', 'c', 'l', 'u', 'x_star'):
        write_vector(getattr(small_lp, key), os.path.join(base, key + '.txt'))
    manifest = dict(name='tiny', A_eq='a_eq.mtx', p_star=0.0,
                    **{key: key + '.txt' for key in ('b_eq', 'c', 'l', 'u', 'x_star')})
    path = os.path.join(base, 'lp.json')
    with open(path, 'w') as fo:
        json.dump(manifest, fo)
    lp = LpInstance.from_manifest(path)
    assert lp.name == 'tiny'
    assert_array_equal(lp.x_star, small_lp.x_star)
    assert lp_to_feasibility(lp).shape == (11, 3)
    del manifest['c']
    with open(path, 'w') as fo:
        json.dump(manifest, fo)
    with pytest.raises(ParseError):
        LpInstance.from_manifest(path)


@pytest.mark.parametrize("as_sparse", [False, True])
def test_save_load_problem(tmpdir, rng, as_sparse):
    A = rng.standard_normal((12, 5))
    if as_sparse:
        A[np.abs(A) < 0.5] = 0.0
        A[:, 0] = 1.0
        A = sparse.csr_matrix(A)
    problem = Problem(A, rng.standard_normal(12), name='saved')
    point = rng.standard_normal(5)
    path = os.path.join(str(tmpdir), 'sub', 'saved.json')
    save_problem(problem, path, witness=point)
    loaded, loaded_point = load_problem(path, with_witness=True)
    assert loaded.name == 'saved'
    assert loaded.is_sparse == as_sparse
    assert_array_equal(loaded.dense(), problem.dense())
    assert_array_equal(loaded.b, problem.b)
    assert_array_equal(loaded_point, point)
    assert load_problem(path).shape == (12, 5)


def test_load_problem_without_witness(tmpdir, identity4):
    path = os.path.join(str(tmpdir), 'eye.json')
    save_problem(identity4, path)
    problem, point = load_problem(path, with_witness=True)
    assert point is None
    assert_array_equal(problem.dense(), np.eye(4))


def test_load_rejects_zero_row(tmpdir):
    base = str(tmpdir)
    spio.mmwrite(os.path.join(base, 'a.mtx'), sparse.coo_matrix(([1.0], ([0], [0])), shape=(2, 2)))
    write_vector([1.0, 1.0], os.path.join(base, 'b.txt'))
    path = os.path.join(base, 'p.json')
    with open(path, 'w') as fo:
        json.dump(dict(matrix_path='a.mtx', rhs_path='b.txt'), fo)
    with pytest.raises(ProblemError, match="zero rows"):
        load_problem(path)


def test_load_csv_matrix(tmpdir):
    base = str(tmpdir)
    with open(os.path.join(base, 'a.csv'), 'w') as fo:
        fo.write('1.0,2.0\n# comment\n"3.0",4.0\n\n-1,0.5\n')
    write_vector([1.0, 2.0, 3.0], os.path.join(base, 'b.txt'))
    path = os.path.join(base, 'p.json')
    with open(path, 'w') as fo:
        json.dump(dict(matrix_path='a.csv', rhs_path='b.txt', m=3, n=2), fo)
    problem = load_problem(path)
    assert_array_equal(problem.dense(), [[1.0, 2.0], [3.0, 4.0], [-1.0, 0.5]])

    with open(os.path.join(base, 'a.csv'), 'w') as fo:
        fo.write("1.0,2.0\n3.0,x\n")
    with pytest.raises(ParseError) as err:
        load_problem(path)
    assert (err.value.line, err.value.column) == (2, 5)

    with open(os.path.join(base, 'a.csv'), 'w') as fo:
        fo.write("1.0,2.0\n\n3.0\n")
    with pytest.raises(ParseError, match="expected 2 fields") as err:
        load_problem(path)
    assert err.value.line == 3


def test_manifest_dimension_mismatch(tmpdir, identity4):
    path = os.path.join(str(tmpdir), 'eye.json')
    save_problem(identity4, path)
    with open(path) as fi:
        manifest = json.load(fi)
    manifest['m'] = 5
    with open(path, 'w') as fo:
        json.dump(manifest, fo)
    with pytest.raises(ProblemError, match="declares"):
        load_problem(path)


def test_manifest_errors(tmpdir):
    path = os.path.join(str(tmpdir), 'bad.json')
    with open(path, 'w') as fo:
        fo.write('{"matrix_path": "a.mtx",\n  "rhs_path" "b.txt"}')
    with pytest.raises(ParseError) as err:
        load_problem(path)
    assert err.value.line == 2
    with open(path, 'w') as fo:
        json.dump({'matrix_path': 'a.mtx'}, fo)
    with pytest.raises(ParseError, match="rhs_path"):
        load_problem(path)
    with pytest.raises(OSError):
        load_problem(os.path.join(str(tmpdir), 'missing.json'))


def test_matrix_market_header_required(tmpdir):
    base = str(tmpdir)
    with open(os.path.join(base, 'a.mtx'), 'w') as fo:
        fo.write("2 2 1\n1 1 1.0\n")
    write_vector([1.0, 1.0], os.path.join(base, 'b.txt'))
    path = os.path.join(base, 'p.json')
    with open(path, 'w') as fo:
        json.dump(dict(matrix_path='a.mtx', rhs_path='b.txt'), fo)
    with pytest.raises(ParseError) as err:
        load_problem(path)
    assert err.value.line == 1


def test_read_vector_reports_position(tmpdir):
    path = os.path.join(str(tmpdir), 'v.txt')
    with open(path, 'w') as fo:
        fo.write("% header\n1.5\n\n  2.5e-3\n   nan?\n")
    with pytest.raises(ParseError) as err:
        read_vector(path)
    assert (err.value.line, err.value.column) == (5, 4)
    assert "v.txt:5:4" in str(err.value)


def test_write_vector_preserves_values(tmpdir):
    path = os.path.join(str(tmpdir), 'v.txt')
    values = np.array([0.1, 1.0 / 3, -2.5e-300, 1e300])
    write_vector(values, path)
    assert_array_equal(read_vector(path), values)


@pytest.mark.parametrize("as_sparse", [False, True])
def test_saved_matrix_values_read_back_exactly(tmpdir, as_sparse):
    A = np.array([[0.1, 1.0 / 3], [-2.5e-300, 1e300], [2.0 / 7, -np.pi]])
    problem = Problem(sparse.csr_matrix(A) if as_sparse else A, [0.1, 1.0 / 3, 1e-17])
    path = os.path.join(str(tmpdir), 'exact.json')
    save_problem(problem, path)
    loaded = load_problem(path)
    assert_array_equal(loaded.dense(), A)
    assert_array_equal(loaded.b, problem.b)
