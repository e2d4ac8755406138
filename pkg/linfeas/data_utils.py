# -*- coding: utf-8 -*-
"""
Feasibility instances and the residual/projection primitives shared by every solver.
"""
import sys
import logging as log
from collections import namedtuple

import numpy as np
from scipy import sparse


# set to True to enable debugging information
DEBUG_ON = False

# rows with squared norm below this are treated as zero rows
ZERO_ROW_THRESHOLD = 1e-300


def ready_logger():
    """
    Prepare python logging object.

    Logger is configured to print DEBUG & INFO messages to stdout.
    ERROR and WARNING logs are printed to stderr.
    Modify this function to customize logging behavior

    Returns
    -------
    Logger
    """
    class LessThanFilter(log.Filter):
        def __init__(self, exclusive_maximum, name=""):
            super(LessThanFilter, self).__init__(name)
            self.max_level = exclusive_maximum

        def filter(self, record):
            # non-zero return means we log this message
            return 1 if record.levelno < self.max_level else 0

    logger = log.getLogger('linfeas')
    if logger.handlers:
        return logger
    logger.setLevel(log.DEBUG)
    logger.propagate = False

    logging_handler_out = log.StreamHandler(sys.stdout)
    logging_handler_out.setLevel(log.DEBUG if DEBUG_ON else log.INFO)
    logging_handler_out.addFilter(LessThanFilter(log.WARNING))

    logging_handler_err = log.StreamHandler(sys.stderr)
    logging_handler_err.setLevel(log.WARNING)

    format = log.Formatter('[%(asctime)s][%(processName)-10s][%(levelname)s] %(message)s')
    logging_handler_err.setFormatter(format)
    logging_handler_out.setFormatter(format)

    logger.addHandler(logging_handler_err)
    logger.addHandler(logging_handler_out)
    return logger


logger = ready_logger()
"""Logger: logging object to be used throughout the library

Built once by ready_logger(); every other module imports this object
so that output of solvers, harness and CLI is controlled in one place.
"""


class ProblemError(ValueError):
    """Malformed feasibility instance or iterate."""


ResidualSummary = namedtuple('ResidualSummary', ['positive_residual', 'norm2', 'theta', 'fsc'])
"""Positive residual (Ax-b)+ of an iterate with its norm, max violation and fraction of satisfied constraints."""


class Problem(object):
    """
    Immutable linear feasibility instance Ax <= b.

    Rows are stored as given (not normalized); squared row norms are cached
    because every projection divides by them.
    """

    def __init__(self, A, b, name=None):
        """
        Parameters
        ----------
        A : ndarray or scipy.sparse matrix
            Constraint matrix of shape (m, n). Sparse input is stored as CSR,
            dense input as a C-contiguous float64 array.
        b : array_like
            Right-hand side of length m.
        name : str
            Optional label used in logs and manifests.

        """
        if sparse.issparse(A):
            A = sparse.csr_matrix(A, dtype=np.float64)
            A.sum_duplicates()
            A.sort_indices()
            finite = np.all(np.isfinite(A.data))
            row_norms_sq = np.asarray(A.multiply(A).sum(axis=1)).ravel()
        else:
            A = np.array(A, dtype=np.float64, order='C', ndmin=2)
            if A.ndim != 2:
                raise ProblemError("constraint matrix must be 2-dimensional, got shape {}".format(A.shape))
            finite = np.all(np.isfinite(A))
            row_norms_sq = np.einsum('ij,ij->i', A, A)
        b = np.array(b, dtype=np.float64).ravel()

        m, n = A.shape
        if m < 1 or n < 1:
            raise ProblemError("problem must have at least one row and one column, got {}x{}".format(m, n))
        if b.shape[0] != m:
            raise ProblemError("right-hand side has length {} but A has {} rows".format(b.shape[0], m))
        if not finite or not np.all(np.isfinite(b)):
            raise ProblemError("problem data contains non-finite entries")
        zero_rows = np.flatnonzero(row_norms_sq < ZERO_ROW_THRESHOLD)
        if zero_rows.size:
            raise ProblemError("zero rows are not allowed (rows {})".format(zero_rows[:10].tolist()))

        self._A = A
        self._b = b
        self._row_norms_sq = row_norms_sq
        for arr in (self._b, self._row_norms_sq):
            arr.setflags(write=False)
        if not self.is_sparse:
            self._A.setflags(write=False)
        self.name = name

    @property
    def A(self):
        return self._A

    @property
    def b(self):
        return self._b

    @property
    def row_norms_sq(self):
        return self._row_norms_sq

    @property
    def shape(self):
        return self._A.shape

    @property
    def m(self):
        return self._A.shape[0]

    @property
    def n(self):
        return self._A.shape[1]

    @property
    def is_sparse(self):
        return sparse.issparse(self._A)

    def __len__(self):
        return self.m

    def __repr__(self):
        return "Problem(name={!r}, m={}, n={}, sparse={})".format(self.name, self.m, self.n, self.is_sparse)

    def dense(self):
        """
        Return A as a dense ndarray.

        Returns
        -------
        ndarray

        """
        if self.is_sparse:
            return self._A.toarray()
        return np.array(self._A)

    def check_iterate(self, x):
        """
        Validate and convert an iterate.

        Parameters
        ----------
        x : array_like

        Returns
        -------
        ndarray
            float64 vector of length n

        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.n:
            raise ProblemError("iterate has shape {} but problem has {} columns".format(x.shape, self.n))
        return x

    def residual(self, x):
        """Ax - b (signed)."""
        return self._A @ x - self._b

    def row_residuals(self, x, rows):
        """
        Signed residuals a_i^T x - b_i restricted to ``rows``.

        Parameters
        ----------
        x : ndarray
        rows : ndarray
            Integer row indices.

        Returns
        -------
        ndarray

        """
        return self._A[rows] @ x - self._b[rows]

    def row_step(self, x, row, coef):
        """
        Return x - coef * a_row as a new vector.

        Only the nonzero pattern of the row is touched for CSR storage.
        """
        out = np.array(x, dtype=np.float64)
        if self.is_sparse:
            start, stop = self._A.indptr[row], self._A.indptr[row + 1]
            out[self._A.indices[start:stop]] -= coef * self._A.data[start:stop]
        else:
            out -= coef * self._A[row]
        return out

    def row(self, row):
        """Dense copy of row ``row``."""
        if self.is_sparse:
            return self._A.getrow(row).toarray().ravel()
        return np.array(self._A[row])


def positive_residual(problem, x, fsc_tol=0.0):
    """
    Compute (Ax - b)+ and its derived summaries.

    Parameters
    ----------
    problem : Problem
    x : array_like
        Iterate of length n.
    fsc_tol : float
        A constraint counts as satisfied when a_i^T x - b_i <= fsc_tol.

    Returns
    -------
    ResidualSummary

    """
    x = problem.check_iterate(x)
    signed = problem.residual(x)
    pos = np.maximum(signed, 0.0)
    theta = float(pos.max()) if pos.size else 0.0
    fsc = np.count_nonzero(signed <= fsc_tol) / float(problem.m)
    return ResidualSummary(positive_residual=pos,
                           norm2=float(np.linalg.norm(pos)),
                           theta=theta,
                           fsc=fsc)


def project_step(problem, x, row, delta):
    """
    Relaxed projection of x onto the halfspace a_row^T x <= b_row.

    x' = x - delta * (a^T x - b)+ / ||a||^2 * a. Satisfied constraints leave x unchanged.

    Parameters
    ----------
    problem : Problem
    x : array_like
    row : int
    delta : float
        Projection parameter in (0, 2]; 1 lands on the hyperplane, 2 reflects.

    Returns
    -------
    ndarray

    """
    if not 0 < delta <= 2:
        raise ProblemError("projection parameter must lie in (0, 2], got {}".format(delta))
    if not 0 <= row < problem.m:
        raise IndexError("row {} out of range for {} constraints".format(row, problem.m))
    x = problem.check_iterate(x)
    violation = float(problem.row_residuals(x, [row])[0])
    if violation <= 0:
        return np.array(x)
    return problem.row_step(x, row, delta * violation / problem.row_norms_sq[row])


def distance_to_box(lower, upper, x):
    """
    Euclidean distance from x to the box [lower, upper].

    Parameters
    ----------
    lower, upper : array_like
        Componentwise bounds with lower <= upper.
    x : array_like

    Returns
    -------
    float

    """
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if lower.shape != upper.shape or lower.shape != x.shape:
        raise ProblemError("box bounds and point must share one shape, got {}, {}, {}"
                           .format(lower.shape, upper.shape, x.shape))
    if np.any(lower > upper):
        raise ProblemError("inconsistent box: lower exceeds upper at {}"
                           .format(np.flatnonzero(lower > upper)[:10].tolist()))
    return float(np.linalg.norm(x - np.clip(x, lower, upper)))
