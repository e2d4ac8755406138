# -*- coding: utf-8 -*-
import os
import json

import pytest

from linfeas import cli
from linfeas.problems import load_problem


@pytest.fixture
def manifest(tmpdir, capsys):
    path = os.path.join(str(tmpdir), 'gauss.json')
    assert cli.main(['-q', 'generate', '--m', '80', '--n', '12', '--seed', '1', '-o', path]) == cli.EXIT_OK
    capsys.readouterr()
    return path


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_generate_writes_manifest(manifest):
    problem, point = load_problem(manifest, with_witness=True)
    assert problem.shape == (80, 12)
    assert point is not None


@pytest.mark.parametrize("kind, shape", [('box', (14, 7)), ('breast_cancer', (569, 30))])
def test_generate_other_kinds(tmpdir, capsys, kind, shape):
    path = os.path.join(str(tmpdir), kind + '.json')
    assert cli.main(['-q', 'generate', '--kind', kind, '--n', '7', '-o', path]) == cli.EXIT_OK
    out = _json_out(capsys)
    assert (out['m'], out['n']) == shape
    assert load_problem(path).shape == shape


def test_solve_converges(manifest, capsys):
    assert cli.main(['-q', 'solve', '-p', manifest, '--beta', '8', '--eps', '1e-6', '--x0', 'far']) == cli.EXIT_OK
    out = _json_out(capsys)
    assert out['status'] == 'converged'
    assert out['residual'] <= 1e-6
    assert out['time_s'] is None


@pytest.mark.parametrize("args", [
    ['--variant', 'gskm', '--xi', '0.5'],
    ['--variant', 'gskm', '--xi', '-0.1', '--bootstrap', 'anchor'],
    ['--variant', 'paskm', '--preset', 'param2'],
    ['--variant', 'paskm', '--alpha', '0.5', '--omega', '0.2', '--gamma', '1.2'],
])
def test_solve_variants(manifest, capsys, args):
    code = cli.main(['-q', 'solve', '-p', manifest, '--beta', '8', '--x0', 'far', '--max-iters', '100000'] + args)
    assert code == cli.EXIT_OK
    assert _json_out(capsys)['status'] == 'converged'


def test_solve_budget_exhausted(manifest, capsys):
    assert cli.main(['-q', 'solve', '-p', manifest, '--x0', 'far', '--max-iters', '1']) == cli.EXIT_BUDGET
    out = _json_out(capsys)
    assert (out['status'], out['iterations']) == ('max_iters', 1)


def test_solve_input_errors(tmpdir, manifest):
    assert cli.main(['-q', 'solve', '-p', os.path.join(str(tmpdir), 'missing.json')]) == cli.EXIT_INPUT
    assert cli.main(['-q', 'solve', '-p', manifest, '--beta', '81']) == cli.EXIT_INPUT
    assert cli.main(['-q', 'solve', '-p', manifest, '--delta', '2.5']) == cli.EXIT_INPUT


def test_solve_trace_is_reproducible(tmpdir, manifest):
    paths = [os.path.join(str(tmpdir), name) for name in ('t1.csv', 't2.csv')]
    for path in paths:
        assert cli.main(['-q', 'solve', '-p', manifest, '--beta', '4', '--seed', '7', '--x0', 'far',
                         '--trace', path]) == cli.EXIT_OK
    with open(paths[0], 'rb') as fa, open(paths[1], 'rb') as fb:
        assert fa.read() == fb.read()
    assert cli.main(['-q', 'solve', '-p', manifest, '--x0', 'far', '--timing', '--trace', paths[0]]) == cli.EXIT_OK
    with open(paths[0]) as fi:
        lines = fi.read().splitlines()
    assert lines[0].startswith('preset,beta,delta,trial,k,time_s')
    assert lines[-1].split(',')[5] != ''


def test_analyze(manifest, capsys):
    assert cli.main(['-q', 'analyze', '-p', manifest, '--xi', '0.5']) == cli.EXIT_OK
    out = _json_out(capsys)
    assert out['rate']['regime'] == 'gskm-q1'
    assert out['spectral']['m'] == 80
    assert 0 < out['bounds']['mu1'] <= out['bounds']['mu2'] <= 1

    assert cli.main(['-q', 'analyze', '-p', manifest, '--preset', 'param1']) == cli.EXIT_OK
    out = _json_out(capsys)
    assert out['rate']['regime'] in ('paskm-matrix', 'paskm-zeta')
    assert out['rate']['Pi1'] is not None


def test_certify(manifest, capsys):
    assert cli.main(['-q', 'certify', '-p', manifest, '--k', '500']) == cli.EXIT_OK
    out = _json_out(capsys)
    assert out['k'] == 500
    assert out['k_min'] >= 1
    assert 0 < out['p_bound'] <= 1
    assert out['sigma_log2'] > out['sigma']


def test_sweep(tmpdir, manifest, capsys):
    plan = os.path.join(str(tmpdir), 'plan.json')
    with open(plan, 'w') as fo:
        json.dump(dict(problem=os.path.basename(manifest), output='runs', presets=['skm', 'gskm-2'],
                       beta_grid=[4], trials=2, max_iters=50000,
                       emit=['residual_vs_iter', 'time_vs_beta']), fo)
    assert cli.main(['-q', 'sweep', '--plan', plan]) == cli.EXIT_OK
    out = _json_out(capsys)
    assert out['cells'] == 4
    assert len(out['aggregate']) == 2
    for name in ('residual_vs_iter.csv', 'time_vs_beta.csv', 'time_vs_beta_trials.csv', 'result.pkl'):
        assert os.path.exists(os.path.join(str(tmpdir), 'runs', name))


def test_sweep_bad_plan(tmpdir):
    plan = os.path.join(str(tmpdir), 'plan.json')
    with open(plan, 'w') as fo:
        fo.write('{"presets": ["skm"]')
    assert cli.main(['-q', 'sweep', '--plan', plan]) == cli.EXIT_INPUT
