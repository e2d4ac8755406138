# -*- coding: utf-8 -*-
"""
Instance generation, file I/O and the SVM / LP transforms into Ax <= b.

On disk a problem is a JSON manifest
    {name, m, n, matrix_path, rhs_path, witness_path?, kind}
whose paths are relative to the manifest. Matrices are Matrix Market files
(coordinate for sparse, array for dense) or comma-separated dense text (.csv);
vectors are newline-separated decimals written with repr().
"""
import os
import csv
import json
from collections import namedtuple

import numpy as np
from scipy import io as spio
from scipy import sparse
from sklearn.datasets import load_breast_cancer

from linfeas.data_utils import Problem, ProblemError, logger
from linfeas.sampling import make_rng


GAUSSIAN, CORRELATED = 'gaussian', 'correlated'


class ParseError(ProblemError):
    """Malformed problem file; ``line`` and ``column`` are 1-based when known."""

    def __init__(self, path, message, line=None, column=None):
        where = path
        if line is not None:
            where += ":{}".format(line)
            if column is not None:
                where += ":{}".format(column)
        super(ParseError, self).__init__("{}: {}".format(where, message))
        self.path = path
        self.line = line
        self.column = column


class GenSpec(object):
    """
    Random consistent instance: b = mix A x1 + (1-mix) A x2.

    Gaussian instances draw A, x1, x2 from N(0, 1); correlated instances draw
    them uniformly from [low, high].
    """

    def __init__(self, kind=GAUSSIAN, m=2000, n=500, mix=0.5, seed=0, low=0.9, high=1.0):
        if kind not in (GAUSSIAN, CORRELATED):
            raise ProblemError("unknown generator kind {!r}".format(kind))
        if m < 1 or n < 1:
            raise ProblemError("m and n must be positive, got {}x{}".format(m, n))
        if not 0 <= mix <= 1:
            raise ProblemError("mix must lie in [0, 1], got {}".format(mix))
        if not low < high:
            raise ProblemError("need low < high, got [{}, {}]".format(low, high))
        self.kind = kind
        self.m = int(m)
        self.n = int(n)
        self.mix = float(mix)
        self.seed = int(seed)
        self.low = float(low)
        self.high = float(high)

    def __repr__(self):
        return "GenSpec(kind={!r}, m={}, n={}, mix={}, seed={})".format(self.kind, self.m, self.n, self.mix, self.seed)

    def to_dict(self):
        return dict(kind=self.kind, m=self.m, n=self.n, mix=self.mix, seed=self.seed, low=self.low, high=self.high)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def gen_random(spec):
    """
    Generate a consistent instance.

    Draw order is fixed: A row-major, then x1, then x2.

    Parameters
    ----------
    spec : GenSpec

    Returns
    -------
    Problem
    ndarray
        x1
    ndarray
        x2

    """
    rng = make_rng(spec.seed)
    if spec.kind == GAUSSIAN:
        draw = rng.standard_normal
    else:
        def draw(size):
            return rng.uniform(spec.low, spec.high, size=size)
    A = draw((spec.m, spec.n))
    x1 = draw(spec.n)
    x2 = draw(spec.n)
    b = spec.mix * (A @ x1) + (1.0 - spec.mix) * (A @ x2)
    name = "{}-{}x{}-s{}".format(spec.kind, spec.m, spec.n, spec.seed)
    return Problem(A, b, name=name), x1, x2


def witness(spec, x1, x2):
    """Convex combination mix x1 + (1-mix) x2, which satisfies A x = b."""
    return spec.mix * x1 + (1.0 - spec.mix) * x2


def svm_to_feasibility(features, labels, name='svm'):
    """
    Homogeneous separability system: row i is -labels[i] features[i], b = 0.

    Parameters
    ----------
    features : array_like
        N x d matrix.
    labels : array_like
        Length N, entries in {-1, +1}.

    Returns
    -------
    Problem

    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ProblemError("features {} and labels {} do not match".format(X.shape, y.shape))
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ProblemError("labels must be -1 or +1")
    return Problem(-y[:, None] * X, np.zeros(X.shape[0]), name=name)


def load_breast_cancer_problem():
    """
    569 x 30 separability system from the Wisconsin diagnostic breast cancer data.

    Returns
    -------
    Problem

    """
    X, t = load_breast_cancer(return_X_y=True)
    # malignant is 0, benign is 1
    return svm_to_feasibility(X, 2.0 * t - 1.0, name='breast_cancer')


def box_problem(lower, upper):
    """
    The box lower <= x <= upper as [I; -I] x <= [upper; -lower].

    Parameters
    ----------
    lower, upper : array_like
        Finite bounds with lower <= upper.

    Returns
    -------
    Problem

    """
    lower = np.asarray(lower, dtype=np.float64).ravel()
    upper = np.asarray(upper, dtype=np.float64).ravel()
    if lower.shape != upper.shape or np.any(lower > upper):
        raise ProblemError("inconsistent box bounds")
    eye = sparse.identity(lower.size, format='csr')
    return Problem(sparse.vstack([eye, -eye], format='csr'), np.concatenate([upper, -lower]), name='box')


class LpInstance(object):
    """
    min c^T x subject to A_eq x = b_eq, l <= x <= u, with known optimal value p_star.

    Infinite entries of l and u mean unbounded.
    """

    def __init__(self, c, A_eq, b_eq, l, u, p_star=None, x_star=None, name='lp'):
        self.c = np.asarray(c, dtype=np.float64).ravel()
        self.A_eq = A_eq if sparse.issparse(A_eq) else np.asarray(A_eq, dtype=np.float64)
        self.b_eq = np.asarray(b_eq, dtype=np.float64).ravel()
        self.l = np.asarray(l, dtype=np.float64).ravel()
        self.u = np.asarray(u, dtype=np.float64).ravel()
        self.p_star = p_star
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=np.float64).ravel()
        self.name = name
        m, n = self.A_eq.shape
        if self.c.size != n or self.l.size != n or self.u.size != n or self.b_eq.size != m:
            raise ProblemError("LP dimensions disagree: A_eq {}x{}, c {}, b {}, l {}, u {}".format(
                m, n, self.c.size, self.b_eq.size, self.l.size, self.u.size))
        both = np.isfinite(self.l) & np.isfinite(self.u)
        if np.any(self.l[both] > self.u[both]):
            raise ProblemError("LP bounds have l > u")

    @classmethod
    def from_manifest(cls, path):
        """
        Load from a JSON manifest {name, A_eq, b_eq, c, l, u, p_star, x_star?}.

        A_eq names a Matrix Market file; the rest name vector files.
        """
        manifest = _read_manifest(path)
        base = os.path.dirname(os.path.abspath(path))
        try:
            A_eq = _read_matrix(os.path.join(base, manifest['A_eq']))
            vectors = {key: read_vector(os.path.join(base, manifest[key])) for key in ('b_eq', 'c', 'l', 'u')}
        except KeyError as err:
            raise ParseError(path, "manifest is missing key {}".format(err))
        x_star = read_vector(os.path.join(base, manifest['x_star'])) if manifest.get('x_star') else None
        return cls(A_eq=A_eq, p_star=manifest.get('p_star'), x_star=x_star,
                   name=manifest.get('name', 'lp'), **vectors)


def lp_to_feasibility(lp):
    """
    Stack [A; -A; I_u; -I_l; c^T] x <= [b; -b; u; -l; p_star].

    Rows of infinite bounds are dropped.

    Parameters
    ----------
    lp : LpInstance

    Returns
    -------
    Problem

    """
    if lp.p_star is None:
        raise ProblemError("LP transform needs the optimal value p_star")
    n = lp.c.size
    eye = sparse.identity(n, format='csr')
    upper = np.flatnonzero(np.isfinite(lp.u))
    lower = np.flatnonzero(np.isfinite(lp.l))
    A_eq = sparse.csr_matrix(lp.A_eq)
    blocks = [A_eq, -A_eq, eye[upper], -eye[lower], sparse.csr_matrix(lp.c.reshape(1, -1))]
    rhs = [lp.b_eq, -lp.b_eq, lp.u[upper], -lp.l[lower], [float(lp.p_star)]]
    A = sparse.vstack(blocks, format='csr')
    logger.debug("LP {} transformed to {}x{} feasibility system.".format(lp.name, A.shape[0], A.shape[1]))
    return Problem(A, np.concatenate(rhs), name=lp.name)


def write_vector(vector, path):
    """One repr() float per line."""
    with open(path, 'w') as fo:
        for value in np.asarray(vector, dtype=np.float64).ravel():
            fo.write(repr(float(value)) + '\n')


def read_vector(path):
    """
    Read a newline-separated vector; blank lines and lines starting with '#' or '%' are skipped.

    Returns
    -------
    ndarray

    """
    values = []
    with open(path, 'r') as fi:
        for lineno, line in enumerate(fi, start=1):
            text = line.strip()
            if not text or text[0] in '#%':
                continue
            try:
                values.append(float(text))
            except ValueError:
                column = len(line) - len(line.lstrip()) + 1
                raise ParseError(path, "not a number: {!r}".format(text), line=lineno, column=column)
    return np.array(values, dtype=np.float64)


def _read_csv_matrix(path):
    rows = []
    with open(path, 'r', newline='') as fi:
        reader = csv.reader(fi)
        for fields in reader:
            if not fields or not ''.join(fields).strip() or fields[0].lstrip().startswith('#'):
                continue
            row, column = [], 1
            for field in fields:
                try:
                    row.append(float(field))
                except ValueError:
                    raise ParseError(path, "not a number: {!r}".format(field.strip()),
                                     line=reader.line_num, column=column)
                column += len(field) + 1
            if rows and len(row) != len(rows[0]):
                raise ParseError(path, "expected {} fields, got {}".format(len(rows[0]), len(row)),
                                 line=reader.line_num)
            rows.append(row)
    if not rows:
        raise ParseError(path, "empty matrix file")
    return np.array(rows, dtype=np.float64)


def _read_matrix(path):
    if path.endswith('.csv'):
        return _read_csv_matrix(path)
    with open(path, 'r') as fi:
        header = fi.readline()
    if not header.startswith('%%MatrixMarket'):
        raise ParseError(path, "missing %%MatrixMarket header", line=1, column=1)
    try:
        matrix = spio.mmread(path)
    except ValueError as err:
        raise ParseError(path, "invalid Matrix Market payload ({})".format(err))
    return sparse.csr_matrix(matrix) if sparse.issparse(matrix) else np.asarray(matrix, dtype=np.float64)


def _read_manifest(path):
    with open(path, 'r') as fi:
        try:
            return json.load(fi)
        except json.JSONDecodeError as err:
            raise ParseError(path, err.msg, line=err.lineno, column=err.colno)


def save_problem(problem, path, witness=None, kind='file'):
    """
    Write ``problem`` as a manifest at ``path`` plus payload files beside it.

    Parameters
    ----------
    problem : Problem
    path : str
        Manifest path, conventionally ending in .json.
    witness : array_like
        Optional feasible point stored with the problem.
    kind : str
        Provenance tag.

    """
    path = os.path.abspath(path)
    base, stem = os.path.split(path)
    stem = os.path.splitext(stem)[0]
    if base and not os.path.isdir(base):
        os.makedirs(base)
    matrix_name, rhs_name = stem + '.mtx', stem + '.rhs.txt'
    spio.mmwrite(os.path.join(base, matrix_name), problem.A, precision=17)
    write_vector(problem.b, os.path.join(base, rhs_name))
    manifest = dict(name=problem.name or stem, m=problem.m, n=problem.n,
                    matrix_path=matrix_name, rhs_path=rhs_name, kind=kind)
    if witness is not None:
        manifest['witness_path'] = stem + '.witness.txt'
        write_vector(witness, os.path.join(base, manifest['witness_path']))
    with open(path, 'w') as fo:
        json.dump(manifest, fo, indent=2, sort_keys=True)
    logger.debug("Saved {} to {}.".format(problem, path))


def load_problem(path, with_witness=False):
    """
    Load a problem manifest.

    Parameters
    ----------
    path : str
    with_witness : bool
        Also return the stored witness (None when absent).

    Returns
    -------
    Problem or (Problem, ndarray)

    """
    manifest = _read_manifest(path)
    base = os.path.dirname(os.path.abspath(path))
    for key in ('matrix_path', 'rhs_path'):
        if key not in manifest:
            raise ParseError(path, "manifest is missing key {!r}".format(key))
    A = _read_matrix(os.path.join(base, manifest['matrix_path']))
    b = read_vector(os.path.join(base, manifest['rhs_path']))
    m, n = manifest.get('m', A.shape[0]), manifest.get('n', A.shape[1])
    if (m, n) != A.shape:
        raise ProblemError("manifest declares {}x{} but matrix is {}x{}".format(m, n, *A.shape))
    problem = Problem(A, b, name=manifest.get('name'))
    if not with_witness:
        return problem
    point = None
    if manifest.get('witness_path'):
        point = problem.check_iterate(read_vector(os.path.join(base, manifest['witness_path'])))
    return problem, point
