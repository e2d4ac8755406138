# -*- coding: utf-8 -*-
"""
Iterative engine for SKM, GSKM and PASKM.

SKM projects (with relaxation delta) onto the most violated of beta uniformly
sampled constraints. GSKM takes the affine combination (1-xi) z_k + xi z_{k-1}
of the last two SKM points. PASKM runs the three Nesterov-type sequences
x, v, y with fixed (alpha, omega, gamma). beta=1 gives uniform randomized
Kaczmarz and beta=m the deterministic Motzkin method.
"""
import time
from collections import namedtuple

import numpy as np

from linfeas import analysis
from linfeas.data_utils import logger, positive_residual, ProblemError
from linfeas.sampling import make_rng, sample_subset, select_max_violated


SKM, GSKM, PASKM = 'skm', 'gskm', 'paskm'
VARIANTS = (SKM, GSKM, PASKM)

# traces are recorded every iteration up to this many matrix entries, else every 10th
AUTO_TRACE_LIMIT = 10**6

PRESETS = {
    'skm': {'variant': SKM, 'xi': 0.0},
    'gskm-1': {'variant': GSKM, 'xi': -0.1},
    'gskm-1a': {'variant': GSKM, 'xi': -0.1},
    'gskm-1b': {'variant': GSKM, 'xi': -0.2},
    'gskm-2': {'variant': GSKM, 'xi': 0.5},
    'paskm-1': {'variant': PASKM, 'preset': analysis.PARAM1},
    'paskm-2': {'variant': PASKM, 'preset': analysis.PARAM2},
    'paskm-zeta': {'variant': PASKM, 'preset': analysis.ZETA},
}
"""Parameter choices used in the numerical comparisons, keyed by label."""


class DivergenceError(RuntimeError):
    """A solver produced a non-finite iterate."""

    def __init__(self, variant, k, last_residual):
        super(DivergenceError, self).__init__(
            "{} diverged at iteration {} (last finite positive residual norm {})".format(variant, k, last_residual))
        self.variant = variant
        self.k = k
        self.last_residual = last_residual


TraceRecord = namedtuple('TraceRecord', ['k', 'time_s', 'residual', 'theta', 'fsc'])
"""Per-iteration metrics: iteration, solver seconds, ||(Ax-b)+||, max violation, fraction satisfied."""


class StoppingRule(object):
    """
    When to stop iterating.

    Kinds
    -----
    positive_residual_norm : ||(Ax_k-b)+|| <= epsilon
    relative_residual_norm : ||(Ax_k-b)+|| / ||(Ax_0-b)+|| <= epsilon
    relative_max_violation : max(Ax_k-b) / max(Ax_0-b) <= epsilon
    iterations : run until the iteration budget
    """
    POSITIVE_RESIDUAL_NORM = 'positive_residual_norm'
    RELATIVE_RESIDUAL_NORM = 'relative_residual_norm'
    RELATIVE_MAX_VIOLATION = 'relative_max_violation'
    ITERATIONS = 'iterations'
    KINDS = (POSITIVE_RESIDUAL_NORM, RELATIVE_RESIDUAL_NORM, RELATIVE_MAX_VIOLATION, ITERATIONS)

    def __init__(self, kind=POSITIVE_RESIDUAL_NORM, epsilon=1e-5, reference=None):
        if kind not in self.KINDS:
            raise ProblemError("unknown stopping rule {!r}, expected one of {}".format(kind, self.KINDS))
        if kind != self.ITERATIONS and not epsilon > 0:
            raise ProblemError("stopping tolerance must be positive, got {}".format(epsilon))
        self.kind = kind
        self.epsilon = epsilon
        self.reference = reference

    def __repr__(self):
        return "StoppingRule(kind={!r}, epsilon={!r}, reference={!r})".format(self.kind, self.epsilon, self.reference)

    def to_dict(self):
        return {'kind': self.kind, 'epsilon': self.epsilon, 'reference': self.reference}

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d.get('kind', cls.POSITIVE_RESIDUAL_NORM),
                   epsilon=d.get('epsilon', 1e-5),
                   reference=d.get('reference'))

    def bind(self, summary):
        """
        Return a copy with the baseline taken from the initial residual summary.

        Parameters
        ----------
        summary : ResidualSummary
            Summary of x_0.

        Returns
        -------
        StoppingRule

        """
        reference = self.reference
        if reference is None:
            if self.kind == self.RELATIVE_RESIDUAL_NORM:
                reference = summary.norm2
            elif self.kind == self.RELATIVE_MAX_VIOLATION:
                reference = summary.theta
        return StoppingRule(self.kind, self.epsilon, reference)

    def satisfied(self, summary):
        """
        Parameters
        ----------
        summary : ResidualSummary

        Returns
        -------
        bool

        """
        if self.kind == self.ITERATIONS:
            return False
        if self.kind == self.POSITIVE_RESIDUAL_NORM:
            return summary.norm2 <= self.epsilon
        value = summary.norm2 if self.kind == self.RELATIVE_RESIDUAL_NORM else summary.theta
        # a feasible start has nothing to reduce
        if not self.reference or self.reference <= 0:
            return value <= 0
        return value / self.reference <= self.epsilon


class SolverConfig(object):
    """
    Algorithm variant plus its parameters.

    SKM reads (delta, beta); GSKM also xi; PASKM also (alpha, omega, gamma).
    """

    def __init__(self, variant=SKM, delta=1.0, beta=1, xi=0.0, alpha=None, omega=None, gamma=None,
                 stopping=None, max_iters=10000, seed=0, fsc_tol=0.0, trace_every=None,
                 gskm_bootstrap='repeat', check_params=True, label=None):
        """
        Parameters
        ----------
        variant : str
            One of 'skm', 'gskm', 'paskm'.
        delta : float
            Projection parameter in (0, 2].
        beta : int
            Sample size.
        xi : float
            GSKM affine weight in (-1, 1].
        alpha, omega, gamma : float
            PASKM parameters, alpha and omega in [0, 1], gamma >= 0.
        stopping : StoppingRule
            Defaults to ||(Ax-b)+|| <= 1e-5.
        max_iters : int
            Iteration budget.
        seed : int
            Seed of the sampling generator.
        fsc_tol : float
            Satisfaction tolerance for the fraction of satisfied constraints.
        trace_every : int
            Trace (and stopping check) cadence. None picks 1 for m*n <= 1e6, else 10.
        gskm_bootstrap : str
            'repeat' sets z_0 := z_1 (so x_2 = z_1); 'anchor' sets z_0 := x_0.
        check_params : bool
            Warn when xi falls outside the convergence region Q.
        label : str
            Preset label, kept for reports.

        """
        self.variant = variant
        self.delta = float(delta)
        self.beta = int(beta)
        self.xi = float(xi)
        self.alpha = alpha
        self.omega = omega
        self.gamma = gamma
        self.stopping = stopping if stopping is not None else StoppingRule()
        self.max_iters = int(max_iters)
        self.seed = int(seed)
        self.fsc_tol = float(fsc_tol)
        self.trace_every = trace_every
        self.gskm_bootstrap = gskm_bootstrap
        self.check_params = check_params
        self.label = label if label is not None else variant
        self.validate()

    def __repr__(self):
        params = "xi={}".format(self.xi) if self.variant == GSKM else \
            "alpha={}, omega={}, gamma={}".format(self.alpha, self.omega, self.gamma) if self.variant == PASKM else ""
        return "SolverConfig({}, delta={}, beta={}, {} seed={})".format(
            self.label, self.delta, self.beta, params + ("," if params else ""), self.seed)

    def validate(self):
        """Raise ProblemError for parameters outside their domains."""
        if self.variant not in VARIANTS:
            raise ProblemError("unknown variant {!r}, expected one of {}".format(self.variant, VARIANTS))
        if not 0 < self.delta <= 2:
            raise ProblemError("delta must lie in (0, 2], got {}".format(self.delta))
        if self.beta < 1:
            raise ProblemError("beta must be at least 1, got {}".format(self.beta))
        if self.max_iters < 0:
            raise ProblemError("max_iters must be nonnegative, got {}".format(self.max_iters))
        if self.trace_every is not None and int(self.trace_every) < 1:
            raise ProblemError("trace cadence must be at least 1, got {}".format(self.trace_every))
        if self.variant == GSKM:
            if not -1 < self.xi <= 1:
                raise ProblemError("xi must lie in (-1, 1], got {}".format(self.xi))
            if self.gskm_bootstrap not in ('repeat', 'anchor'):
                raise ProblemError("gskm_bootstrap must be 'repeat' or 'anchor', got {!r}".format(self.gskm_bootstrap))
        if self.variant == PASKM:
            if None in (self.alpha, self.omega, self.gamma):
                raise ProblemError("PASKM needs alpha, omega and gamma")
            self.alpha, self.omega, self.gamma = float(self.alpha), float(self.omega), float(self.gamma)
            if not 0 <= self.alpha <= 1 or not 0 <= self.omega <= 1:
                raise ProblemError("PASKM needs alpha, omega in [0, 1], got alpha={}, omega={}"
                                   .format(self.alpha, self.omega))
            if self.gamma < 0:
                raise ProblemError("PASKM needs gamma >= 0, got {}".format(self.gamma))

    def copy(self, **changes):
        """Return a new config with ``changes`` applied."""
        params = dict(variant=self.variant, delta=self.delta, beta=self.beta, xi=self.xi,
                      alpha=self.alpha, omega=self.omega, gamma=self.gamma, stopping=self.stopping,
                      max_iters=self.max_iters, seed=self.seed, fsc_tol=self.fsc_tol,
                      trace_every=self.trace_every, gskm_bootstrap=self.gskm_bootstrap,
                      check_params=self.check_params, label=self.label)
        params.update(changes)
        return SolverConfig(**params)

    @classmethod
    def from_preset(cls, label, delta, beta, problem=None, bounds=None, **kwargs):
        """
        Resolve a preset label into a config.

        Parameters
        ----------
        label : str
            Key of PRESETS.
        delta : float
        beta : int
        problem : Problem
            Needed by the PASKM presets when ``bounds`` is not given.
        bounds : ConvexityBounds
            Precomputed mu_1/mu_2 for the PASKM presets.
        kwargs
            Any further SolverConfig arguments.

        Returns
        -------
        SolverConfig

        """
        key = label.lower()
        if key not in PRESETS:
            raise ProblemError("unknown preset {!r}, expected one of {}".format(label, sorted(PRESETS)))
        preset = PRESETS[key]
        params = dict(kwargs)
        params.update(variant=preset['variant'], delta=delta, beta=beta, label=key)
        if preset['variant'] == PASKM:
            if bounds is None:
                if problem is None:
                    raise ProblemError("preset {!r} needs the problem (or its convexity bounds)".format(label))
                bounds = analysis.convexity_bounds(analysis.spectral_summary(problem), problem.m, beta, delta)
            params['alpha'], params['omega'], params['gamma'] = analysis.paskm_preset(delta, bounds, preset['preset'])
        else:
            params['xi'] = preset['xi']
        return cls(**params)


class SolverState(object):
    """
    Iterates of one run.

    x is the current iterate; GSKM also keeps z_prev (z_{k-1}); PASKM keeps v and
    y = alpha v + (1-alpha) x. cesaro_sum accumulates x_1..x_k (y_1..y_k for PASKM).
    """

    def __init__(self, x, k=0, z_prev=None, v=None, y=None, cesaro_sum=None, status=None):
        self.k = k
        self.x = x
        self.z_prev = z_prev
        self.v = v
        self.y = y
        self.cesaro_sum = cesaro_sum if cesaro_sum is not None else np.zeros_like(x)
        self.status = status

    def __repr__(self):
        return "SolverState(k={}, status={!r})".format(self.k, self.status)

    def averaged(self):
        """The iterate whose Cesaro average is tracked (y for PASKM, x otherwise)."""
        return self.y if self.y is not None else self.x


def init_state(problem, cfg, x0=None):
    """
    Build the state at k = 0.

    Parameters
    ----------
    problem : Problem
    cfg : SolverConfig
    x0 : array_like
        Starting point, zero vector when None.

    Returns
    -------
    SolverState

    """
    x0 = np.zeros(problem.n) if x0 is None else np.array(problem.check_iterate(x0))
    if cfg.variant == PASKM:
        # v_0 = x_0, hence y_0 = x_0
        return SolverState(x=x0, v=x0.copy(), y=x0.copy())
    return SolverState(x=x0)


def _sampled_step(problem, point, cfg, rng):
    """Select the most violated sampled row at ``point``; returns (row, violation / ||a_row||^2) or (None, 0)."""
    subset = sample_subset(problem.m, cfg.beta, rng)
    selection = select_max_violated(problem, point, subset)
    if selection.chosen is None:
        return None, 0.0
    return selection.chosen, selection.violation / problem.row_norms_sq[selection.chosen]


def skm_step(problem, state, cfg, rng):
    """
    x_{k+1} = x_k - delta (a_i*^T x_k - b_i*)+ / ||a_i*||^2 a_i*.

    Parameters
    ----------
    problem : Problem
    state : SolverState
    cfg : SolverConfig
    rng : numpy.random.Generator

    Returns
    -------
    SolverState

    """
    row, coef = _sampled_step(problem, state.x, cfg, rng)
    x = state.x.copy() if row is None else problem.row_step(state.x, row, cfg.delta * coef)
    return SolverState(x=x, k=state.k + 1, cesaro_sum=state.cesaro_sum + x)


def gskm_step(problem, state, cfg, rng):
    """
    z_k = SKM step from x_k; x_{k+1} = (1-xi) z_k + xi z_{k-1}.

    Parameters
    ----------
    problem : Problem
    state : SolverState
    cfg : SolverConfig
    rng : numpy.random.Generator

    Returns
    -------
    SolverState

    """
    row, coef = _sampled_step(problem, state.x, cfg, rng)
    z = state.x.copy() if row is None else problem.row_step(state.x, row, cfg.delta * coef)
    z_prev = state.z_prev
    if z_prev is None:
        z_prev = z if cfg.gskm_bootstrap == 'repeat' else state.x
    x = (1.0 - cfg.xi) * z + cfg.xi * z_prev
    return SolverState(x=x, k=state.k + 1, z_prev=z, cesaro_sum=state.cesaro_sum + x)


def paskm_step(problem, state, cfg, rng):
    """
    y_k = alpha v_k + (1-alpha) x_k, the row is selected at y_k, then
    x_{k+1} = y_k - delta g and v_{k+1} = omega v_k + (1-omega) y_k - gamma g
    with g = (a_i*^T y_k - b_i*)+ / ||a_i*||^2 a_i*.

    Parameters
    ----------
    problem : Problem
    state : SolverState
    cfg : SolverConfig
    rng : numpy.random.Generator

    Returns
    -------
    SolverState

    """
    y = state.y
    row, coef = _sampled_step(problem, y, cfg, rng)
    v_mix = cfg.omega * state.v + (1.0 - cfg.omega) * y
    if row is None:
        x, v = y.copy(), v_mix
    else:
        x = problem.row_step(y, row, cfg.delta * coef)
        v = problem.row_step(v_mix, row, cfg.gamma * coef)
    y_next = cfg.alpha * v + (1.0 - cfg.alpha) * x
    return SolverState(x=x, k=state.k + 1, v=v, y=y_next, cesaro_sum=state.cesaro_sum + y_next)


STEPS = {SKM: skm_step, GSKM: gskm_step, PASKM: paskm_step}


def cesaro_average(state):
    """
    Running mean of x_1..x_k (y_1..y_k for PASKM).

    Parameters
    ----------
    state : SolverState

    Returns
    -------
    ndarray

    """
    if state.k < 1:
        raise ValueError("Cesaro average needs at least one iteration")
    return state.cesaro_sum / state.k


def trace_cadence(problem, cfg):
    if cfg.trace_every is not None:
        return int(cfg.trace_every)
    return 1 if problem.m * problem.n <= AUTO_TRACE_LIMIT else 10


def _warn_outside_q(problem, cfg, bounds):
    if cfg.variant != GSKM or not cfg.check_params or cfg.xi >= 0 or cfg.delta >= 2:
        return
    if bounds is None:
        bounds = analysis.convexity_bounds(analysis.spectral_summary(problem), problem.m, cfg.beta, cfg.delta)
    membership = analysis.q_membership(cfg.xi, cfg.delta, bounds)
    if membership.region == analysis.OUTSIDE:
        logger.warning("xi={} lies outside the convergence region Q for delta={} (slack {:.4g}); running anyway."
                       .format(cfg.xi, cfg.delta, membership.slack))


def run_solver(problem, cfg, x0=None, bounds=None):
    """
    Iterate until the stopping rule holds or the iteration budget is used.

    Trace records (and stopping checks) are taken at the trace cadence and at
    the last iteration. Timing covers the solver steps only.

    Parameters
    ----------
    problem : Problem
    cfg : SolverConfig
    x0 : array_like
        Starting point, zero vector when None.
    bounds : ConvexityBounds
        Precomputed bounds for the xi-region warning.

    Returns
    -------
    SolverState
        Final state; ``status`` is 'converged' or 'max_iters'.
    list
        TraceRecord list.

    """
    if cfg.beta > problem.m:
        raise ProblemError("beta={} exceeds the number of constraints m={}".format(cfg.beta, problem.m))
    _warn_outside_q(problem, cfg, bounds)

    rng = make_rng(cfg.seed)
    state = init_state(problem, cfg, x0)
    step = STEPS[cfg.variant]
    cadence = trace_cadence(problem, cfg)

    summary = positive_residual(problem, state.x, cfg.fsc_tol)
    stopping = cfg.stopping.bind(summary)
    trace = [TraceRecord(0, 0.0, summary.norm2, summary.theta, summary.fsc)]
    logger.debug("Starting {} on {} (initial residual {:.6g}).".format(cfg, problem, summary.norm2))

    if stopping.satisfied(summary):
        state.status = 'converged'
        return state, trace

    elapsed_ns = 0
    last_residual = summary.norm2
    state.status = 'max_iters'
    while state.k < cfg.max_iters:
        start = time.perf_counter_ns()
        state = step(problem, state, cfg, rng)
        elapsed_ns += time.perf_counter_ns() - start

        if not np.all(np.isfinite(state.x)) or (state.v is not None and not np.all(np.isfinite(state.v))):
            raise DivergenceError(cfg.variant, state.k, last_residual)
        if state.k % cadence == 0 or state.k == cfg.max_iters:
            summary = positive_residual(problem, state.x, cfg.fsc_tol)
            last_residual = summary.norm2
            trace.append(TraceRecord(state.k, elapsed_ns * 1e-9, summary.norm2, summary.theta, summary.fsc))
            if stopping.satisfied(summary):
                state.status = 'converged'
                break
    if state.status != 'converged':
        state.status = 'max_iters'

    logger.debug("{} stopped at k={} ({}), residual {:.6g}.".format(cfg.label, state.k, state.status, last_residual))
    return state, trace
