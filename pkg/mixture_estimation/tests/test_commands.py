import argparse
import json

import numpy as np
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from mixture_estimation.exceptions import DegenerateSampleError
from mixture_estimation.management.commands._common import seed
from mixture_estimation.management.commands.simulate import Command as SimulateCommand
from mixture_estimation.models import ExperimentRun
from mixture_estimation.services import harness
from mixture_estimation.utils.series_io import read_series


@pytest.fixture
def series_file(tmp_path):
    path = tmp_path / 'series.csv'
    call_command('simulate', '--case', '1', '--n', '300', '--seed', '9', '--out', str(path))
    return path


def test_simulate_synthesis(series_file):
    series = read_series(series_file)
    assert series.n == 300
    assert series.meta['route'] == 'synthesis'
    assert series.meta['seed'] == 9
    assert series.meta['mixture']['family'] == 'beta_two_component'


def test_simulate_panel(tmp_path):
    path = tmp_path / 'panel.csv'
    call_command('simulate', '--mixture-json', '{"family": "beta_uniform", "w": 0.8, "a_star": 0.9, '
                 '"p3": 2.0, "q3": 1.2}', '--n', '40', '--N', '7', '--burn-in', '5', '--out', str(path))
    series = read_series(path)
    assert series.n == 40
    assert series.meta['N'] == 7
    assert series.meta['burn_in'] == 5


def test_simulate_mixture_from_file(tmp_path):
    descriptor = tmp_path / 'mixture.json'
    descriptor.write_text(json.dumps({'family': 'compensator', 'kappa': 0.5, 'a_star': 0.8}))
    out = tmp_path / 'series.csv'
    call_command('simulate', '--mixture-json', str(descriptor), '--n', '16', '--out', str(out))
    assert read_series(out).meta['mixture']['family'] == 'compensator'


def test_simulate_invalid_mixture_exit_code(tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('simulate', '--mixture-json', '{"family": "farima", "d": 0.7}', '--n', '16',
                     '--out', str(tmp_path / 'x.csv'))
    assert excinfo.value.returncode == 2


@pytest.mark.parametrize("value", ['-1', str(2 ** 64), 'abc'])
def test_simulate_rejects_bad_seed_with_usage_error(tmp_path, value):
    command = SimulateCommand()
    with pytest.raises(SystemExit) as excinfo:
        command.run_from_argv(['manage.py', 'simulate', '--case', '1', '--n', '16', '--seed', value,
                               '--out', str(tmp_path / 'x.csv')])
    assert excinfo.value.code == 2
    assert not (tmp_path / 'x.csv').exists()


def test_seed_argument_type():
    assert seed('0') == 0
    assert seed(str(2 ** 64 - 1)) == 2 ** 64 - 1
    with pytest.raises(argparse.ArgumentTypeError):
        seed('-3')


def test_estimate_writes_grid_and_sidecar(series_file, tmp_path):
    grid = tmp_path / 'phi_hat.csv'
    call_command('estimate', str(series_file), '--d', '0.25', '--grid-out', str(grid), '--grid-size', '64')
    table = np.loadtxt(grid, delimiter=',')
    assert table.shape == (64, 2)
    sidecar = json.loads(grid.with_suffix('.json').read_text())
    assert sidecar['alpha'] == pytest.approx(0.5)
    assert sidecar['Kn'] == 2
    assert sidecar['mass'] == pytest.approx(1.0, abs=1e-6)
    assert len(sidecar['zeta_hat']) == 3
    assert sidecar['config']['d'] == 0.25


def test_estimate_clip(series_file, tmp_path):
    grid = tmp_path / 'clipped.csv'
    call_command('estimate', str(series_file), '--alpha', '0.5', '--kn', '4', '--clip',
                 '--grid-out', str(grid))
    table = np.loadtxt(grid, delimiter=',')
    assert np.all(table[:, 1] >= 0)
    assert json.loads(grid.with_suffix('.json').read_text())['Kn'] == 4


def test_estimate_without_alpha_or_d_exit_code(series_file, tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('estimate', str(series_file), '--grid-out', str(tmp_path / 'g.csv'))
    assert excinfo.value.returncode == 2


def test_estimate_missing_series_exit_code(tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('estimate', str(tmp_path / 'missing.csv'), '--alpha', '0.5',
                     '--grid-out', str(tmp_path / 'g.csv'))
    assert excinfo.value.returncode == 2


def test_forward_tables(tmp_path):
    prefix = tmp_path / 'case3'
    call_command('forward', '--case', '3', '--max-lag', '10', '--n-freq', '16', '--alpha', '0.2',
                 '--sigma-eps2', '1.0', '--out-prefix', str(prefix))
    cov = np.loadtxt(f'{prefix}_covariance.csv', delimiter=',', skiprows=1)
    spec = np.loadtxt(f'{prefix}_spectral.csv', delimiter=',', skiprows=1)
    assert cov.shape == (11, 2)
    assert spec.shape == (16, 2)
    assert spec[-1, 0] == pytest.approx(np.pi)
    summary = json.loads((tmp_path / 'case3_summary.json').read_text())
    assert summary['mass'] == pytest.approx(1.0)
    assert summary['integrability']['alpha'] == 0.2
    assert summary['variance'] == pytest.approx(cov[0, 1], rel=1e-8)


def test_ma_coeffs(tmp_path):
    out = tmp_path / 'ma.csv'
    call_command('ma_coeffs', '--d', '0.3', '--kappa', '0.5', '--a-star', '0.8', '--J', '128', '--out', str(out))
    table = np.loadtxt(out, delimiter=',', skiprows=1)
    assert table.shape == (129, 4)
    assert table[0, 3] == pytest.approx(1.0)
    summary = json.loads(out.with_suffix('.json').read_text())
    assert summary['J'] == 128
    assert summary['sigma2'] == pytest.approx(summary['sigma_g2'] / (2 * np.pi), rel=1e-7)


def test_ma_coeffs_needs_a_factor(tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('ma_coeffs', '--d', '0.3', '--out', str(tmp_path / 'ma.csv'))
    assert excinfo.value.returncode == 2


@pytest.mark.django_db
def test_experiment_from_case_records_run(tmp_path):
    call_command('experiment', '--case', '3', '--M', '6', '--n', '128', '--out-dir', str(tmp_path), '--record')
    report = json.loads((tmp_path / 'report.json').read_text())
    assert report['replications']['total'] == 6
    assert report['spec']['case_id'] == 3
    assert (tmp_path / 'fig1_boxplot.csv').exists()
    assert (tmp_path / 'fig2_qq.csv').exists()
    run = ExperimentRun.objects.get()
    assert run.status == 'completed'
    assert run.total == 6
    assert run.seed == '20240101'
    assert 'timing' in run.report


def test_experiment_from_spec_file(tmp_path):
    spec = {
        'mixture': {'family': 'case', 'case': 2},
        'n': 128, 'M': 4, 'alpha': 0.6, 'eval_points': [0.0], 'seed': 5, 'grid_size': 32,
    }
    path = tmp_path / 'spec.json'
    path.write_text(json.dumps(spec))
    call_command('experiment', str(path), '--out-dir', str(tmp_path / 'out'))
    report = json.loads((tmp_path / 'out' / 'report.json').read_text())
    assert len(report['grid']['x']) == 32
    assert report['alpha'] == 0.6


def test_experiment_invalid_spec_exit_code(tmp_path):
    path = tmp_path / 'spec.json'
    path.write_text(json.dumps({'n': 128, 'M': 4}))
    with pytest.raises(CommandError) as excinfo:
        call_command('experiment', str(path), '--out-dir', str(tmp_path))
    assert excinfo.value.returncode == 2


def test_experiment_variance_slope_needs_grid(tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('experiment', '--case', '3', '--M', '4', '--n', '64', '--variance-slope',
                     '--out-dir', str(tmp_path))
    assert excinfo.value.returncode == 2


@pytest.mark.django_db
def test_experiment_failure_exit_code_and_record(tmp_path, monkeypatch):
    def degenerate(series, config):
        raise DegenerateSampleError("zero variance")

    monkeypatch.setattr(harness, 'estimate', degenerate)
    with pytest.raises(CommandError) as excinfo:
        call_command('experiment', '--case', '3', '--M', '4', '--n', '64', '--out-dir', str(tmp_path), '--record')
    assert excinfo.value.returncode == 3
    run = ExperimentRun.objects.get()
    assert run.status == 'failed'
    assert run.failed == 4
    assert run.error_code == 'failure_threshold_exceeded'
