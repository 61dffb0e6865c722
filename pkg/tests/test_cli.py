import json

import pytest
import yaml
from typer.testing import CliRunner

from ksblow import __version__
from ksblow.cli import app
from ksblow.scenario import load_config


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner(mix_stderr=False)


@pytest.fixture
def steady_file(tmp_path):
    path = tmp_path / 'steady.yaml'
    path.write_text(yaml.safe_dump({
        'mesh': {'N': 32},
        'model': {'name': 'power_diffusion', 'q': -1},
        'solver': {'t_end': 0.1},
        'initial_data': {'m': 1.0, 'eta': 0.5, 'profile': 'flat'},
        'diagnostics': {'every_steps': None, 'every_time': 0.02},
    }))
    return path


def test_version(runner):
    result = runner.invoke(app, ['--version'])
    assert result.exit_code == 0
    assert __version__ in result.stdout


def test_verbose_and_quiet_exclude_each_other(runner):
    result = runner.invoke(app, ['--verbose', '--quiet', 'check-model', 'semilinear'])
    assert result.exit_code == 2


@pytest.mark.parametrize('args, code, regime', [
    (['power_diffusion', '--q', '-1'], 0, 'FiniteTimeBlowupRegime'),
    (['power_diffusion(q=-1)'], 0, 'FiniteTimeBlowupRegime'),
    (['remark_family', '--gamma1', '3', '--gamma2', '0.5'], 0, 'InfiniteTimeBlowupRegime'),
    (['semilinear'], 1, 'Unknown'),
])
def test_check_model(runner, args, code, regime):
    result = runner.invoke(app, ['check-model', *args])
    assert result.exit_code == code
    assert json.loads(result.stdout)['regime'] == regime


@pytest.mark.parametrize('args', [
    ['quadratic'],
    ['power_diffusion'],
    ['power_diffusion(q=-1)', '--q', '-1'],
    ['power_diffusion(q=oops)'],
])
def test_check_model_usage_errors(runner, args):
    result = runner.invoke(app, ['check-model', *args])
    assert result.exit_code == 2
    assert result.stdout == ''


def test_make_initial_data(runner, steady_file, tmp_path):
    out = tmp_path / 'out'
    result = runner.invoke(app, ['make-initial-data', '--config', str(steady_file), '--out', str(out)])
    assert result.exit_code == 0

    config_hash = load_config(steady_file).config_hash()
    summary = json.loads(result.stdout)
    assert summary['config_hash'] == config_hash
    assert summary['m_actual'] == pytest.approx(1.0)
    assert (out / f'{config_hash}-initial.csv').exists()
    assert (out / f'{config_hash}-membership.json').exists()


def test_simulate_and_classify(runner, steady_file, tmp_path):
    out = tmp_path / 'out'
    result = runner.invoke(app, ['simulate', '--config', str(steady_file), '--out', str(out)])
    assert result.exit_code == 0
    assert 'BoundedCandidate' in result.stdout

    series = out / f'{load_config(steady_file).config_hash()}-series.csv'
    assert series.exists()

    result = runner.invoke(app, ['classify', str(series), '--t-end', '0.1', '--cells', '32'])
    assert result.exit_code == 0
    assert json.loads(result.stdout)['verdict'] == 'BoundedCandidate'

    # A series that stops short of t_end reads as a triggered run
    result = runner.invoke(app, ['classify', str(series), '--t-end', '1.0', '--cells', '32'])
    assert result.exit_code == 3
    verdict = json.loads(result.stdout)
    assert verdict['verdict'] == 'FiniteTimeBlowup'
    assert verdict['confirmed'] is False
    assert verdict['refinements'] == [{'N': 32, 'T_star': pytest.approx(0.1)}]


def test_simulate_uses_configured_out_dir(runner, tmp_path):
    path = tmp_path / 'steady.yaml'
    out = tmp_path / 'configured'
    path.write_text(yaml.safe_dump({
        'mesh': {'N': 16},
        'model': {'name': 'power_diffusion', 'q': -1},
        'solver': {'t_end': 0.02},
        'initial_data': {'m': 1.0, 'eta': 0.5, 'profile': 'flat'},
        'out_dir': str(out),
    }))
    result = runner.invoke(app, ['--quiet', 'simulate', '--config', str(path)])
    assert result.exit_code == 0
    assert (out / f'{load_config(path).config_hash()}-summary.json').exists()


def test_invalid_config_is_a_usage_error(runner, tmp_path):
    path = tmp_path / 'bad.yaml'
    path.write_text('mesh:\n  N: 0\n')
    result = runner.invoke(app, ['simulate', '--config', str(path)])
    assert result.exit_code == 2
    assert 'mesh.N' in result.stderr


def test_missing_config(runner, tmp_path):
    result = runner.invoke(app, ['simulate', '--config', str(tmp_path / 'missing.yaml')])
    assert result.exit_code == 2


def test_classify_rejects_bad_series(runner, tmp_path):
    path = tmp_path / 'series.csv'
    path.write_text('t,dt\n0,0\n')
    result = runner.invoke(app, ['classify', str(path), '--t-end', '1'])
    assert result.exit_code == 1


@pytest.mark.parametrize('json_export, suffix', [(False, 'csv'), (True, 'json')])
def test_sweep(runner, tmp_path, json_export, suffix):
    path = tmp_path / 'sweep.yaml'
    path.write_text(yaml.safe_dump({
        'axes': {'q': [-1.0, -0.5]},
        'template': {
            'mesh': {'N': 16},
            'model': {'name': 'power_diffusion', 'q': -1},
            'solver': {'t_end': 0.02},
            'initial_data': {'m': 1.0, 'eta': 0.5},
        },
    }))
    out = tmp_path / 'out'
    args = ['sweep', '--config', str(path), '--out', str(out), '--jobs', '1']
    result = runner.invoke(app, args + (['--json'] if json_export else []))
    assert result.exit_code == 0

    exported = list(out.glob(f'*-sweep.{suffix}'))
    assert len(exported) == 1
    if json_export:
        rows = json.loads(exported[0].read_text())
        assert [row['q'] for row in rows] == [-1.0, -0.5]
    else:
        assert exported[0].read_text().splitlines()[0].startswith('config_hash,q,verdict')


def test_sweep_rejects_bad_spec(runner, tmp_path):
    path = tmp_path / 'sweep.yaml'
    path.write_text('axes: {}\n')
    result = runner.invoke(app, ['sweep', '--config', str(path)])
    assert result.exit_code == 2


def test_check_model_table(runner):
    result = runner.invoke(app, ['check-model', 'remark_family(gamma1=3, gamma2=0.5)', '--table'])
    assert result.exit_code == 0
    assert 'balance' in result.stdout
    assert 'Regime: InfiniteTimeBlowupRegime' in result.stdout
