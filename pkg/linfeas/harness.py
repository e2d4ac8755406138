# -*- coding: utf-8 -*-
"""
Experiment sweeps over presets, sample sizes and projection parameters.

Each (preset, beta, delta, trial) cell is one run_solver call. Trial t uses
seed base_seed + t for every preset, so variants within a trial are paired.
Finished cells are checkpointed with dill under <output>/cells/ and reloaded
on rerun when their settings signature still matches; the whole result goes
to <output>/result.pkl.
"""
import os
import csv
import json
import hashlib
from collections import namedtuple, OrderedDict

import dill
import numpy as np
from pathos.multiprocessing import cpu_count
from pathos.multiprocessing import ProcessPool as Pool
from tqdm import tqdm

from linfeas import analysis
from linfeas.data_utils import logger, positive_residual, ProblemError
from linfeas.problems import GenSpec, ParseError, gen_random, load_problem
from linfeas.solvers import SolverConfig, StoppingRule, DivergenceError, run_solver, PASKM, GSKM, PRESETS


RESIDUAL_VS_ITER = 'residual_vs_iter'
RESIDUAL_VS_TIME = 'residual_vs_time'
FSC_VS_ITER = 'fsc_vs_iter'
FSC_VS_TIME = 'fsc_vs_time'
TIME_VS_BETA = 'time_vs_beta'
EMIT_KINDS = (RESIDUAL_VS_ITER, RESIDUAL_VS_TIME, FSC_VS_ITER, FSC_VS_TIME, TIME_VS_BETA)

TRACE_HEADER = ['preset', 'beta', 'delta', 'trial', 'k', 'time_s', 'residual', 'theta', 'fsc']

CONVERGED, MAX_ITERS, DIVERGED = 'converged', 'max_iters', 'diverged'

CellKey = namedtuple('CellKey', ['preset', 'beta', 'delta', 'trial'])

CellRecord = namedtuple('CellRecord', ['key', 'seed', 'status', 'iterations', 'time_s',
                                       'residual', 'theta', 'fsc', 'trace', 'x_final', 'message'])
"""Outcome of one cell; trace and x_final are None for divergent cells."""


class MissingSeriesError(KeyError):
    """A requested cell has no trace to emit."""


def cell_id(key):
    return "{}_b{}_d{}_t{}".format(key.preset, key.beta, repr(float(key.delta)), key.trial)


class ExperimentPlan(object):
    """
    Sweep definition, usually read from JSON.

    Keys: problem (manifest path) or generate (GenSpec dict), presets,
    beta_grid (ints or "m"), delta_grid, trials, stopping {kind, epsilon},
    max_iters, base_seed, x0_scale, trace_every, n_procs, output, emit.
    """

    def __init__(self, output, presets=('skm',), beta_grid=(1,), delta_grid=(1.0,), trials=1,
                 stopping=None, max_iters=10000, base_seed=0, problem=None, generate=None,
                 x0_scale=10.0, trace_every=None, n_procs=1, emit=(RESIDUAL_VS_ITER,), fsc_tol=0.0):
        self.output = output
        self.presets = [p.lower() for p in presets]
        self.beta_grid = list(beta_grid)
        self.delta_grid = [float(d) for d in delta_grid]
        self.trials = int(trials)
        self.stopping = stopping if stopping is not None else StoppingRule()
        self.max_iters = int(max_iters)
        self.base_seed = int(base_seed)
        self.problem = problem
        self.generate = generate
        self.x0_scale = float(x0_scale)
        self.trace_every = trace_every
        self.n_procs = int(n_procs)
        self.emit = list(emit)
        self.fsc_tol = float(fsc_tol)
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ProblemError("trials must be at least 1, got {}".format(self.trials))
        if not self.presets or not self.beta_grid or not self.delta_grid:
            raise ProblemError("presets, beta_grid and delta_grid must be nonempty")
        unknown = [p for p in self.presets if p not in PRESETS]
        if unknown:
            raise ProblemError("unknown presets {}, expected any of {}".format(unknown, sorted(PRESETS)))
        bad = [k for k in self.emit if k not in EMIT_KINDS]
        if bad:
            raise ProblemError("unknown emission kinds {}, expected any of {}".format(bad, EMIT_KINDS))
        if (self.problem is None) == (self.generate is None):
            raise ProblemError("plan needs exactly one of 'problem' and 'generate'")
        if self.x0_scale <= 0:
            raise ProblemError("x0_scale must be positive")

    @classmethod
    def from_dict(cls, d, base_dir=None):
        d = dict(d)
        if 'stopping' in d:
            d['stopping'] = StoppingRule.from_dict(d['stopping'])
        if d.get('generate') is not None and not isinstance(d['generate'], GenSpec):
            d['generate'] = GenSpec.from_dict(d['generate'])
        if base_dir is not None:
            for key in ('problem', 'output'):
                if d.get(key) is not None and not os.path.isabs(d[key]):
                    d[key] = os.path.join(base_dir, d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        """Read a plan; relative problem/output paths resolve against the plan's directory."""
        with open(path, 'r') as fi:
            try:
                plan = json.load(fi)
            except json.JSONDecodeError as err:
                raise ParseError(path, err.msg, line=err.lineno, column=err.colno)
        return cls.from_dict(plan, base_dir=os.path.dirname(os.path.abspath(path)))

    def load_problem(self):
        if self.problem is not None:
            return load_problem(self.problem)
        return gen_random(self.generate)[0]

    def resolve_betas(self, m):
        betas = []
        for beta in self.beta_grid:
            beta = m if beta == 'm' else int(beta)
            if not 1 <= beta <= m:
                raise ProblemError("beta={} outside [1, m={}]".format(beta, m))
            betas.append(beta)
        return betas


class ExperimentResult(object):
    """Per-cell records in plan order plus the shared starting point."""

    def __init__(self, plan, problem_name, x0, records):
        self.plan = plan
        self.problem_name = problem_name
        self.x0 = x0
        self.records = records

    def __len__(self):
        return len(self.records)

    def record(self, key):
        for rec in self.records:
            if rec.key == key:
                return rec
        raise MissingSeriesError("no cell {}".format(cell_id(key)))

    def aggregate(self):
        """
        Per (preset, beta, delta) summaries over trials.

        Returns
        -------
        list
            OrderedDicts with mean/median iterations, mean time, mean final
            residual/theta/fsc and counts of converged and diverged trials.
        """
        groups = OrderedDict()
        for rec in self.records:
            groups.setdefault(rec.key[:3], []).append(rec)
        out = []
        for (preset, beta, delta), recs in groups.items():
            ok = [r for r in recs if r.status != DIVERGED]
            row = OrderedDict(preset=preset, beta=beta, delta=delta, trials=len(recs),
                              converged=sum(r.status == CONVERGED for r in recs),
                              diverged=len(recs) - len(ok))
            if ok:
                row.update(mean_iterations=float(np.mean([r.iterations for r in ok])),
                           median_iterations=float(np.median([r.iterations for r in ok])),
                           mean_time_s=float(np.mean([r.time_s for r in ok])),
                           mean_residual=float(np.mean([r.residual for r in ok])),
                           mean_theta=float(np.mean([r.theta for r in ok])),
                           mean_fsc=float(np.mean([r.fsc for r in ok])))
            out.append(row)
        return out

    def verify_stopping(self, problem):
        """
        Recompute the residual of every converged cell's final iterate.

        Returns
        -------
        list
            Keys of cells whose stored final iterate does not meet the stopping rule.
        """
        failed = []
        stopping = self.plan.stopping.bind(positive_residual(problem, self.x0, self.plan.fsc_tol))
        for rec in self.records:
            if rec.status != CONVERGED:
                continue
            summary = positive_residual(problem, rec.x_final, self.plan.fsc_tol)
            if not stopping.satisfied(summary):
                failed.append(rec.key)
        return failed


def far_point(problem, scale=10.0, max_doublings=60):
    """
    Starting point r * ones (or -r * ones) with a nonzero positive residual, doubling r from ``scale``.

    Parameters
    ----------
    problem : Problem
    scale : float
    max_doublings : int

    Returns
    -------
    ndarray

    """
    ones = np.ones(problem.n)
    r = scale
    for _ in range(max_doublings):
        for x0 in (r * ones, -r * ones):
            if positive_residual(problem, x0).norm2 > 0:
                return x0
        r *= 2.0
    logger.warning("No violated far point found for {}; starting from {} * ones.".format(problem, scale))
    return scale * ones


def _problem_digest(problem):
    digest = hashlib.sha1("{!r} {!r}".format(problem.name, problem.shape).encode())
    if problem.is_sparse:
        parts = (problem.A.data, problem.A.indices, problem.A.indptr)
    else:
        parts = (problem.A,)
    for arr in parts + (problem.b,):
        digest.update(np.ascontiguousarray(arr).tobytes())
    return digest.hexdigest()


def _cell_signature(cfg, x0, problem_digest):
    """Everything besides the cell key that decides a cell's outcome."""
    return dict(problem=problem_digest,
                x0=hashlib.sha1(np.ascontiguousarray(x0, dtype=np.float64).tobytes()).hexdigest(),
                stopping=cfg.stopping.to_dict(), max_iters=cfg.max_iters, seed=cfg.seed,
                fsc_tol=cfg.fsc_tol, trace_every=cfg.trace_every, variant=cfg.variant,
                xi=cfg.xi, alpha=cfg.alpha, omega=cfg.omega, gamma=cfg.gamma,
                gskm_bootstrap=cfg.gskm_bootstrap)


def _run_cell(task):
    """Run one cell; divergence is recorded, not raised."""
    key, problem, cfg, x0, bounds = task
    try:
        state, trace = run_solver(problem, cfg, x0=x0, bounds=bounds)
    except DivergenceError as err:
        logger.warning("Cell {} diverged: {}".format(cell_id(key), err))
        return CellRecord(key=key, seed=cfg.seed, status=DIVERGED, iterations=err.k, time_s=None,
                          residual=err.last_residual, theta=None, fsc=None, trace=None, x_final=None,
                          message=str(err))
    last = trace[-1]
    return CellRecord(key=key, seed=cfg.seed, status=state.status, iterations=state.k, time_s=last.time_s,
                      residual=last.residual, theta=last.theta, fsc=last.fsc, trace=trace, x_final=state.x,
                      message=None)


def _cell_tasks(plan, problem, x0):
    betas = plan.resolve_betas(problem.m)
    spectral = None
    tasks = []
    for delta in plan.delta_grid:
        for beta in betas:
            bounds = None
            needs_bounds = any(PRESETS[p]['variant'] == PASKM or
                               (PRESETS[p]['variant'] == GSKM and PRESETS[p]['xi'] < 0) for p in plan.presets)
            if needs_bounds:
                if spectral is None:
                    spectral = analysis.spectral_summary(problem)
                bounds = analysis.convexity_bounds(spectral, problem.m, beta, delta)
            for preset in plan.presets:
                for trial in range(plan.trials):
                    cfg = SolverConfig.from_preset(preset, delta, beta, bounds=bounds,
                                                   stopping=plan.stopping, max_iters=plan.max_iters,
                                                   seed=plan.base_seed + trial, fsc_tol=plan.fsc_tol,
                                                   trace_every=plan.trace_every)
                    tasks.append((CellKey(preset, beta, delta, trial), problem, cfg, x0, bounds))
    return tasks


def _make_pool(n_procs):
    if n_procs > 1:
        return Pool(n_procs)
    elif n_procs == 0:
        return Pool(cpu_count())
    return None


def run_experiment(plan, problem=None):
    """
    Execute every cell of ``plan``, reusing checkpointed cells.

    Parameters
    ----------
    plan : ExperimentPlan
    problem : Problem
        Overrides the plan's problem source when given.

    Returns
    -------
    ExperimentResult

    """
    if problem is None:
        logger.info("Loading problem.")
        problem = plan.load_problem()
    logger.info("Running sweep on {}.".format(problem))

    cells_dir = os.path.join(plan.output, 'cells')
    if not os.path.isdir(cells_dir):
        os.makedirs(cells_dir)

    x0 = far_point(problem, plan.x0_scale)
    tasks = _cell_tasks(plan, problem, x0)

    digest = _problem_digest(problem)
    signatures = {task[0]: _cell_signature(task[2], x0, digest) for task in tasks}

    # load previous cells if they were run with the same settings
    done, stale = {}, 0
    for task in tasks:
        path = os.path.join(cells_dir, cell_id(task[0]) + '.pkl')
        if os.path.exists(path):
            with open(path, 'rb') as fi:
                checkpoint = dill.load(fi)
            if isinstance(checkpoint, dict) and checkpoint.get('signature') == signatures[task[0]]:
                done[task[0]] = checkpoint['record']
            else:
                stale += 1
    pending = [task for task in tasks if task[0] not in done]
    if done:
        logger.info("Loaded {} finished cells from {}.".format(len(done), cells_dir))
    if stale:
        logger.info("Recomputing {} cells whose checkpoints used other settings.".format(stale))

    pool = _make_pool(plan.n_procs) if len(pending) > 1 else None
    if pool is None:
        proc_results = map(_run_cell, pending)
    else:
        proc_results = pool.imap(_run_cell, pending)
        pool.close()

    logger.info("Begin {} cells.".format(len(pending)))
    for rec in tqdm(proc_results, total=len(pending), disable=not pending):
        done[rec.key] = rec
        with open(os.path.join(cells_dir, cell_id(rec.key) + '.pkl'), 'wb') as fo:
            dill.dump({'signature': signatures[rec.key], 'record': rec}, fo)
    logger.info("Progress: Done.")
    if pool is not None:
        pool.join()
        pool.restart()

    result = ExperimentResult(plan, problem.name, x0, [done[task[0]] for task in tasks])
    result_path = os.path.join(plan.output, 'result.pkl')
    logger.info("Saving results to {}.".format(result_path))
    with open(result_path, 'wb') as fo:
        dill.dump(result, fo)
    return result


def _fmt(value):
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_rows(path, rows):
    with open(path, 'w', newline='') as fo:
        writer = csv.writer(fo, lineterminator='\n')
        writer.writerow(TRACE_HEADER)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_trace(path, trace, key=None, timing=False):
    """
    Write one run's trace with the standard header.

    ``time_s`` stays empty unless ``timing`` is set, so reruns give identical files.
    """
    preset, beta, delta, trial = key if key is not None else ('', '', '', '')
    _write_rows(path, [(preset, beta, delta, trial, rec.k, rec.time_s if timing else None,
                        rec.residual, rec.theta, rec.fsc) for rec in trace])


def emit_traces(result, kind, keys=None, out_dir=None):
    """
    Write a tidy CSV for one series kind.

    Iteration-axis kinds leave time_s empty; time-axis kinds fill it. The
    time_vs_beta kind writes one aggregate row per (preset, beta, delta) with
    trial 'all' and k the mean iterations, plus a per-trial file
    time_vs_beta_trials.csv from which the aggregate is recomputed.

    Parameters
    ----------
    result : ExperimentResult
    kind : str
        One of EMIT_KINDS.
    keys : list
        Cells to emit; defaults to every non-divergent cell.
    out_dir : str
        Defaults to the plan's output directory.

    Returns
    -------
    str
        Path of the written file.

    """
    if kind not in EMIT_KINDS:
        raise ProblemError("unknown emission kind {!r}".format(kind))
    out_dir = out_dir or result.plan.output
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    if keys is None:
        skipped = [r.key for r in result.records if r.status == DIVERGED]
        if skipped:
            logger.warning("Skipping {} divergent cells.".format(len(skipped)))
        records = [r for r in result.records if r.status != DIVERGED]
    else:
        records = [result.record(key) for key in keys]
    for rec in records:
        if rec.trace is None:
            raise MissingSeriesError("cell {} has no trace ({})".format(cell_id(rec.key), rec.status))

    path = os.path.join(out_dir, kind + '.csv')
    if kind == TIME_VS_BETA:
        trial_rows = [tuple(rec.key) + (rec.iterations, rec.time_s, rec.residual, rec.theta, rec.fsc)
                      for rec in records]
        _write_rows(os.path.join(out_dir, kind + '_trials.csv'), trial_rows)
        _write_rows(path, aggregate_trial_rows(trial_rows))
    else:
        timed = kind in (RESIDUAL_VS_TIME, FSC_VS_TIME)
        rows = []
        for rec in records:
            for tr in rec.trace:
                rows.append(tuple(rec.key) + (tr.k, tr.time_s if timed else None, tr.residual, tr.theta, tr.fsc))
        _write_rows(path, rows)
    logger.info("Wrote {}.".format(path))
    return path


def aggregate_trial_rows(trial_rows):
    """
    Mean of (k, time_s, residual, theta, fsc) per (preset, beta, delta).

    Parameters
    ----------
    trial_rows : list
        Tuples ordered as TRACE_HEADER.

    Returns
    -------
    list
        One tuple per group with trial 'all'.

    """
    groups = OrderedDict()
    for row in trial_rows:
        groups.setdefault(tuple(row[:3]), []).append([float(v) for v in row[4:]])
    return [key + ('all',) + tuple(float(v) for v in np.mean(np.array(vals), axis=0))
            for key, vals in groups.items()]


def read_trace_csv(path):
    """Rows of a trace CSV as dicts of strings."""
    with open(path, 'r', newline='') as fi:
        return list(csv.DictReader(fi))
