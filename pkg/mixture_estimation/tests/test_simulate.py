import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mixture_estimation.exceptions import InvalidParameterError
from mixture_estimation.presets import case_mixture_descriptor
from mixture_estimation.services import simulate
from mixture_estimation.services.estimator import sample_autocov
from mixture_estimation.services.mixture import BetaUniformMixture, build_mixture
from mixture_estimation.services.simulate import (
    AggregatedSeries,
    GaussianSynthesizer,
    PanelConfig,
    aggregate,
    ar1_path,
    gaussian_synthesis,
    member_generator,
    sample_coefficient,
)


@pytest.fixture(scope='module')
def case3():
    return build_mixture(case_mixture_descriptor(3))


@pytest.mark.parametrize("kwargs", [
    {'N': 0, 'n': 32},
    {'N': 4, 'n': 4},
    {'N': 4, 'n': 32, 'sigma_eps': 0.0},
    {'N': 4, 'n': 32, 'burn_in': -1},
    {'N': 4, 'n': 32, 'seed': 2 ** 64},
])
def test_panel_config_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        PanelConfig(**kwargs)


def test_single_member_panel_is_the_ar1_path(case3):
    config = PanelConfig(N=1, n=64, seed=7)
    series = aggregate(case3, config)
    rng = member_generator(7, 0)
    a = sample_coefficient(case3, rng)
    assert_allclose(series.values, ar1_path(a, config, rng), rtol=1e-12, atol=1e-14)


def test_aggregate_is_reproducible(case3):
    config = PanelConfig(N=5, n=32, seed=11)
    first = aggregate(case3, config)
    assert_array_equal(first.values, aggregate(case3, config).values)
    other = aggregate(case3, PanelConfig(N=5, n=32, seed=12))
    assert not np.allclose(first.values, other.values)
    assert first.meta['route'] == 'panel'
    assert first.descriptor()['mixture'] == case3.to_dict()


def test_aggregate_independent_of_worker_count(case3):
    config = PanelConfig(N=600, n=16, seed=3)
    assert_array_equal(aggregate(case3, config).values, aggregate(case3, config, workers=3).values)


def test_burn_in_keeps_length(case3):
    series = aggregate(case3, PanelConfig(N=3, n=20, burn_in=50, seed=1))
    assert series.n == 20
    assert len(series) == 20


def test_ar1_path_rejects_unit_root():
    with pytest.raises(InvalidParameterError):
        ar1_path(1.0, PanelConfig(N=1, n=16), np.random.default_rng(0))


def test_synthesis_is_deterministic(case3):
    synthesizer = GaussianSynthesizer(case3, 64, 1.0)
    first = synthesizer.sample(123)
    assert_array_equal(first.values, synthesizer.sample(123).values)
    assert first.meta['route'] == 'synthesis'
    assert first.meta['method'] in ('circulant', 'cholesky')
    assert first.meta['seed'] == 123
    assert first.n == 64


def test_synthesis_variance_matches_autocovariance():
    m = BetaUniformMixture(0.5, 0.5, 2.0, 3.0)
    synthesizer = GaussianSynthesizer(m, 16, 1.0)
    rng = np.random.default_rng(2024)
    draws = np.array([synthesizer.sample_values(rng) for _ in range(4000)])
    empirical = np.mean(draws[:, 0] * draws[:, :3].T, axis=1)
    assert_allclose(empirical, m.autocovariances(3, 1.0), rtol=0.1, atol=0.05)


def test_synthesis_single_observation(case3):
    series = gaussian_synthesis(case3, 1, 1.0, 5)
    assert series.n == 1
    assert series.meta['method'] == 'single'


def test_synthesis_uses_natural_variance_by_default():
    m = BetaUniformMixture(0.5, 0.5, 2.0, 3.0)
    assert GaussianSynthesizer(m, 8).sigma_eps2 == m.natural_sigma_eps2


def test_aggregated_series_rejects_nonfinite():
    with pytest.raises(InvalidParameterError):
        AggregatedSeries([0.0, np.nan], {})


def test_ar1_path_lag_one_autocorrelation():
    path = ar1_path(0.9, PanelConfig(N=1, n=100000), np.random.default_rng(17))
    rho = np.dot(path[:-1], path[1:]) / np.dot(path, path)
    assert rho == pytest.approx(0.9, abs=0.01)


def test_ar1_path_starts_stationary():
    a, sigma = 0.9, 1.5
    config = PanelConfig(N=1, n=8, sigma_eps=sigma)
    rng = np.random.default_rng(29)
    paths = np.array([ar1_path(a, config, rng) for _ in range(10000)])
    # Var of a sample variance over 1e4 Gaussian draws is about 1.4%
    stationary = sigma ** 2 / (1 - a * a)
    assert np.var(paths[:, 0]) == pytest.approx(stationary, rel=0.06)
    assert np.var(paths[:, -1]) == pytest.approx(stationary, rel=0.06)


def test_case1_coefficient_mean():
    m = build_mixture(case_mixture_descriptor(1))
    rng = np.random.default_rng(41)
    draws = np.array([sample_coefficient(m, rng) for _ in range(100000)])
    standard_error = draws.std() / np.sqrt(len(draws))
    assert abs(draws.mean() - m.mean()) < 3 * standard_error
    assert np.all(np.abs(draws) < 1)


@pytest.mark.slow
@pytest.mark.parametrize("h", [0, 2])
def test_large_panel_matches_limit_autocovariance(h):
    m = build_mixture(case_mixture_descriptor(1))
    n = 5000
    series = aggregate(m, PanelConfig(N=5000, n=n, seed=2024))
    sigma = m.autocovariances(n + 3, 1.0)
    # Bartlett variance of σ̂(h); the long-memory tail makes it comparable to 5%
    k = np.abs(np.arange(-(n - 1), n))
    shifted = np.arange(-(n - 1), n)
    bartlett = np.sum(sigma[k] ** 2 + sigma[np.abs(shifted + h)] * sigma[np.abs(shifted - h)]) / n
    tolerance = max(0.05 * sigma[h], 3 * np.sqrt(bartlett))
    assert abs(sample_autocov(series, h) - sigma[h]) <= tolerance


def test_small_negative_embedding_eigenvalue_is_clipped(monkeypatch):
    m = BetaUniformMixture(0.5, 0.5, 2.0, 3.0)

    def nearly_nonnegative(values):
        out = np.full(len(values), 1e4)
        out[1] = -1e-9
        return out

    monkeypatch.setattr(simulate.np.fft, 'fft', nearly_nonnegative)
    synthesizer = GaussianSynthesizer(m, 16, 1.0)
    assert synthesizer.route == 'circulant'
    assert synthesizer._eigen.min() == 0.0


def test_negative_embedding_eigenvalue_falls_back_to_cholesky(monkeypatch):
    m = BetaUniformMixture(0.5, 0.5, 2.0, 3.0)

    def slightly_negative(values):
        # Tiny next to the largest eigenvalue but below the absolute floor
        out = np.full(len(values), 1e4)
        out[1] = -1e-6
        return out

    monkeypatch.setattr(simulate.np.fft, 'fft', slightly_negative)
    synthesizer = GaussianSynthesizer(m, 16, 1.0)
    assert synthesizer.route == 'cholesky'
