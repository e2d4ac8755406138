# -*- coding: utf-8 -*-
"""
Command line entry point: generate, solve, sweep, analyze and certify.

Exit codes: 0 converged / completed, 2 iteration budget exhausted,
3 input error, 1 interrupted.
"""
import argparse
import json
import sys
import logging as log

import numpy as np

from linfeas import analysis
from linfeas.analysis import BoundError, report_to_dict
from linfeas.data_utils import logger, ProblemError
from linfeas.harness import ExperimentPlan, run_experiment, emit_traces, far_point, write_trace
from linfeas.problems import (GenSpec, gen_random, witness, save_problem, load_problem,
                              load_breast_cancer_problem, box_problem)
from linfeas.sampling import SamplingError
from linfeas.solvers import SolverConfig, StoppingRule, run_solver, SKM, GSKM, PASKM, VARIANTS


EXIT_OK, EXIT_INTERRUPTED, EXIT_BUDGET, EXIT_INPUT = 0, 1, 2, 3


def _add_param_args(parser):
    parser.add_argument("--delta",
                        type=float,
                        default=1.0,
                        help="Projection parameter in (0, 2].")
    parser.add_argument("--beta",
                        type=int,
                        default=1,
                        help="Number of constraints sampled per iteration.")
    parser.add_argument("--xi",
                        type=float,
                        default=None,
                        help="GSKM affine weight in (-1, 1].")
    parser.add_argument("--alpha", type=float, default=None, help="PASKM alpha in [0, 1].")
    parser.add_argument("--omega", type=float, default=None, help="PASKM omega in [0, 1].")
    parser.add_argument("--gamma", type=float, default=None, help="PASKM gamma >= 0.")
    parser.add_argument("--preset",
                        choices=analysis.PASKM_PRESETS[:3],
                        default=None,
                        help="PASKM parameter rule used when alpha/omega/gamma are not all given.")


def parse_args(argv=None):
    """
    Parse command line arguments

    Subcommands:
      generate -- write a random, SVM or box instance as a manifest
      solve    -- run one solver on a manifest
      sweep    -- run an experiment plan
      analyze  -- rate constants for a parameter choice
      certify  -- certificate-of-feasibility bounds

    Returns
    -------
    Namespace
        Argument namespace object

    """
    parser = argparse.ArgumentParser("Randomized projection solvers for linear feasibility Ax <= b.")
    parser.add_argument("-q", "--quiet",
                        action="store_true",
                        help="Only log warnings and errors.")
    sub = parser.add_subparsers(dest="command")
    sub.required = True

    gen = sub.add_parser("generate", help="Generate an instance.")
    gen.add_argument("--kind",
                     choices=["gaussian", "correlated", "breast_cancer", "box"],
                     default="gaussian")
    gen.add_argument("--m", type=int, default=2000, help="Rows of random instances.")
    gen.add_argument("--n", type=int, default=500, help="Columns of random and box instances.")
    gen.add_argument("--mix", type=float, default=0.5,
                     help="Weight of A x1 in b = mix A x1 + (1-mix) A x2.")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--low", type=float, default=0.9, help="Lower entry bound of correlated instances.")
    gen.add_argument("--high", type=float, default=1.0, help="Upper entry bound of correlated instances.")
    gen.add_argument("--lower", type=float, default=-1.0, help="Lower bound of every box coordinate.")
    gen.add_argument("--upper", type=float, default=1.0, help="Upper bound of every box coordinate.")
    gen.add_argument("-o", "--out", required=True, type=str, help="Manifest path to write.")

    solve = sub.add_parser("solve", help="Run a solver on one problem.")
    solve.add_argument("-p", "--problem", required=True, type=str, help="Problem manifest.")
    solve.add_argument("--variant", choices=VARIANTS, default=SKM)
    _add_param_args(solve)
    solve.add_argument("--stopping",
                       choices=StoppingRule.KINDS,
                       default=StoppingRule.POSITIVE_RESIDUAL_NORM)
    solve.add_argument("--eps", type=float, default=1e-5, help="Stopping tolerance.")
    solve.add_argument("--max-iters", type=int, default=100000)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--trace-every", type=int, default=None,
                       help="Trace cadence; default 1 for m*n <= 1e6, else 10.")
    solve.add_argument("--x0",
                       choices=["zero", "far"],
                       default="zero",
                       help="Start from the origin or from a violated far point r*ones.")
    solve.add_argument("--bootstrap",
                       choices=["repeat", "anchor"],
                       default="repeat",
                       help="GSKM first step: z_0 := z_1 (repeat) or z_0 := x_0 (anchor).")
    solve.add_argument("--trace", type=str, default=None, help="CSV file for the residual trace.")
    solve.add_argument("--timing", action="store_true", help="Fill the time_s column of the trace.")

    sweep = sub.add_parser("sweep", help="Run an experiment plan.")
    sweep.add_argument("--plan", required=True, type=str, help="JSON plan file.")
    sweep.add_argument("--n_procs", type=int, default=None,
                       help="Override the plan's process count; '0' uses all processors.")

    analyze = sub.add_parser("analyze", help="Rate constants of a parameter choice.")
    analyze.add_argument("-p", "--problem", required=True, type=str)
    _add_param_args(analyze)

    certify = sub.add_parser("certify", help="Certificate-of-feasibility bounds for GSKM.")
    certify.add_argument("-p", "--problem", required=True, type=str)
    certify.add_argument("--delta", type=float, default=1.0)
    certify.add_argument("--beta", type=int, default=1)
    certify.add_argument("--xi", type=float, default=0.0)
    certify.add_argument("--k", type=int, required=True, help="Iteration count to bound.")

    return parser.parse_args(argv)


def _print(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def _paskm_triple(args, problem):
    if None not in (args.alpha, args.omega, args.gamma):
        return args.alpha, args.omega, args.gamma
    bounds = analysis.convexity_bounds(analysis.spectral_summary(problem), problem.m, args.beta, args.delta)
    return analysis.paskm_preset(args.delta, bounds, args.preset or analysis.PARAM1)


def generate(args):
    if args.kind in ("gaussian", "correlated"):
        spec = GenSpec(kind=args.kind, m=args.m, n=args.n, mix=args.mix, seed=args.seed,
                       low=args.low, high=args.high)
        problem, x1, x2 = gen_random(spec)
        point = witness(spec, x1, x2)
    elif args.kind == "breast_cancer":
        problem, point = load_breast_cancer_problem(), None
    else:
        problem = box_problem(np.full(args.n, args.lower), np.full(args.n, args.upper))
        point = np.clip(np.zeros(args.n), args.lower, args.upper)
    save_problem(problem, args.out, witness=point, kind=args.kind)
    logger.info("Wrote {} to {}.".format(problem, args.out))
    _print({'name': problem.name, 'm': problem.m, 'n': problem.n, 'manifest': args.out})
    return EXIT_OK


def solve(args):
    problem = load_problem(args.problem)
    params = dict(variant=args.variant, delta=args.delta, beta=args.beta,
                  stopping=StoppingRule(args.stopping, args.eps), max_iters=args.max_iters,
                  seed=args.seed, trace_every=args.trace_every, gskm_bootstrap=args.bootstrap)
    if args.variant == GSKM:
        params['xi'] = 0.0 if args.xi is None else args.xi
    elif args.variant == PASKM:
        params['alpha'], params['omega'], params['gamma'] = _paskm_triple(args, problem)
    cfg = SolverConfig(**params)
    x0 = far_point(problem) if args.x0 == "far" else None

    logger.info("Solving {} with {}.".format(problem, cfg))
    state, trace = run_solver(problem, cfg, x0=x0)
    if args.trace:
        write_trace(args.trace, trace, key=(cfg.label, cfg.beta, cfg.delta, 0), timing=args.timing)
    last = trace[-1]
    _print({'status': state.status, 'iterations': state.k, 'residual': last.residual,
            'theta': last.theta, 'fsc': last.fsc, 'time_s': last.time_s if args.timing else None})
    return EXIT_OK if state.status == 'converged' else EXIT_BUDGET


def sweep(args):
    plan = ExperimentPlan.from_json(args.plan)
    if args.n_procs is not None:
        plan.n_procs = args.n_procs
    result = run_experiment(plan)
    for kind in plan.emit:
        emit_traces(result, kind)
    _print({'cells': len(result), 'aggregate': result.aggregate()})
    return EXIT_OK


def analyze(args):
    problem = load_problem(args.problem)
    spectral = analysis.spectral_summary(problem)
    bounds = analysis.convexity_bounds(spectral, problem.m, args.beta, args.delta)
    if args.xi is not None:
        report = analysis.gskm_rate(args.xi, args.delta, bounds)
    elif args.preset is not None or args.alpha is not None:
        alpha, omega, gamma = _paskm_triple(args, problem)
        report = analysis.paskm_rate(alpha, omega, gamma, args.delta, bounds)
    else:
        report = analysis.gskm_rate(0.0, args.delta, bounds)
    _print({'spectral': report_to_dict(spectral), 'bounds': report_to_dict(bounds),
            'rate': report_to_dict(report)})
    return EXIT_OK


def certify(args):
    problem = load_problem(args.problem)
    spectral = analysis.spectral_summary(problem)
    bounds = analysis.convexity_bounds(spectral, problem.m, args.beta, args.delta)
    rate = analysis.gskm_rate(args.xi, args.delta, bounds)
    if not rate.preconditions_ok:
        logger.warning("Rate preconditions fail: {}".format("; ".join(rate.violated)))
    psi = float(np.sqrt(problem.row_norms_sq.max()))
    report = analysis.certificate_bounds(analysis.encoding_length(problem), problem.n, rate.phi,
                                         analysis.rho_bar(rate), args.k, psi=psi)
    out = report_to_dict(report)
    out['sigma_log2'] = analysis.encoding_length(problem, base=2)
    _print(out)
    return EXIT_OK


COMMANDS = {'generate': generate, 'solve': solve, 'sweep': sweep, 'analyze': analyze, 'certify': certify}


def main(argv=None):
    """
    Run one subcommand.

    Returns
    -------
    int
        Exit code.

    """
    args = parse_args(argv)
    logger.setLevel(log.WARNING if args.quiet else log.DEBUG)
    try:
        return COMMANDS[args.command](args)
    except (ProblemError, SamplingError, BoundError, OSError) as err:
        logger.error(str(err))
        return EXIT_INPUT


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        sys.exit(EXIT_INTERRUPTED)
