import numpy as np
import pytest
from numpy.testing import assert_allclose

from mixture_estimation.exceptions import DegenerateSampleError, InvalidParameterError
from mixture_estimation.presets import SIMULATION_CASES, case_mixture_descriptor
from mixture_estimation.services.estimator import (
    GAMMA_BOUND,
    EstimatorConfig,
    alpha_rule,
    estimate,
    kernel_eta,
    kernel_growth,
    periodogram,
    periodogram_estimate,
    periodogram_grid,
    sample_autocov,
    sample_autocovariances,
    sigma_eps2_hat,
    truncation_Kn,
    zeta_hat,
)
from mixture_estimation.services.gegenbauer import build_basis
from mixture_estimation.services.mixture import build_mixture
from mixture_estimation.services.simulate import GaussianSynthesizer


@pytest.fixture(scope='module')
def case1_series():
    m = build_mixture(case_mixture_descriptor(1))
    return GaussianSynthesizer(m, 2048, 1.0).sample(20240101)


def test_truncation_degree():
    assert truncation_Kn(1500, 0.42) == 3
    assert truncation_Kn(1500, 0.41) == 2
    assert truncation_Kn(500, 0.42) == 2
    with pytest.raises(InvalidParameterError):
        truncation_Kn(1500, GAMMA_BOUND)
    with pytest.raises(InvalidParameterError):
        truncation_Kn(1, 0.3)


def test_alpha_rule():
    assert alpha_rule(0.25) == pytest.approx(0.5)
    assert alpha_rule(0.4) == pytest.approx(0.2)
    with pytest.raises(InvalidParameterError):
        alpha_rule(0.5)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        EstimatorConfig()
    with pytest.raises(InvalidParameterError):
        EstimatorConfig(alpha=0.5, gamma=0.6)
    with pytest.raises(InvalidParameterError):
        EstimatorConfig(alpha=0.5, kn_override=-1)
    assert EstimatorConfig(d=0.25).resolved_alpha() == pytest.approx(0.5)
    assert EstimatorConfig(alpha=0.3, d=0.25).resolved_alpha() == pytest.approx(0.3)
    assert EstimatorConfig(alpha=0.3, d=0.25, use_alpha_rule=True).resolved_alpha() == pytest.approx(0.5)


def test_consistency_warnings():
    config = EstimatorConfig(alpha=2.0, d=0.25)
    assert config.consistency_warnings(2.0)
    assert EstimatorConfig(alpha=0.5, d=0.25).consistency_warnings(0.5) == []
    assert EstimatorConfig(alpha=2.0).consistency_warnings(2.0) == []


def test_sample_autocovariances_use_divisor_n():
    x = np.array([1.0, 2.0, 3.0])
    assert_allclose(sample_autocovariances(x, 2), [14 / 3, 8 / 3, 3 / 3])
    assert sample_autocov(x, 1) == pytest.approx(8 / 3)
    with pytest.raises(InvalidParameterError):
        sample_autocovariances(x, 3)


def test_sigma_eps2_hat():
    assert sigma_eps2_hat(np.ones(4)) == pytest.approx(0.5)


def test_zero_series_is_degenerate():
    with pytest.raises(DegenerateSampleError) as excinfo:
        estimate(np.zeros(50), EstimatorConfig(alpha=0.5))
    assert excinfo.value.code == 'nonpositive_innovation_variance'


def test_short_series_rejected():
    with pytest.raises(InvalidParameterError):
        estimate(np.arange(5.0), EstimatorConfig(alpha=0.5, kn_override=3))


def test_estimate_structure(case1_series):
    fitted = estimate(case1_series, EstimatorConfig(alpha=0.5))
    assert fitted.Kn == truncation_Kn(2048, 0.42)
    assert fitted.n == 2048
    basis = build_basis(0.5, fitted.Kn)
    for k in range(fitted.Kn + 1):
        assert fitted.zeta_hat[k] == pytest.approx(zeta_hat(case1_series, basis, k), rel=1e-12)
    payload = fitted.to_dict()
    assert payload['Kn'] == fitted.Kn
    assert len(payload['zeta_hat']) == fitted.Kn + 1
    assert payload['config']['alpha'] == 0.5


def test_population_autocovariances_give_projection_coefficients():
    m = build_mixture(SIMULATION_CASES[1]['mixture'])
    basis = build_basis(0.5, 4)
    autocov = m.autocovariances(7, 2.0)
    zeta = basis.coefficients @ (autocov[:5] - autocov[2:7])
    assert_allclose(zeta, 2.0 * m.gegenbauer_coefficients(basis), rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("case_id", sorted(SIMULATION_CASES))
def test_estimate_has_unit_mass(case_id):
    case = SIMULATION_CASES[case_id]
    synthesizer = GaussianSynthesizer(build_mixture(case['mixture']), 300, 1.0)
    config = EstimatorConfig(alpha=case['alpha'])
    for seed in range(17):
        fitted = estimate(synthesizer.sample(seed), config)
        assert abs(fitted.mass() - 1.0) < 1e-6


def test_evaluate_domain_and_clipping(case1_series):
    fitted = estimate(case1_series, EstimatorConfig(alpha=0.5))
    with pytest.raises(InvalidParameterError):
        fitted.evaluate(1.0)
    assert isinstance(fitted(0.2), float)
    x, values, weights = fitted.grid(clip=True)
    assert np.all(values >= 0)
    assert weights @ values == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("form", ['coefficients', 'polynomial'])
def test_kernel_forms_agree(form):
    basis = build_basis(0.5, 4)
    lam = np.linspace(-np.pi, np.pi, 11)
    x = np.array([-0.5, 0.0, 0.7])
    reference = kernel_eta(basis, 4, lam, x)
    assert_allclose(kernel_eta(basis, 4, lam, x, form=form), reference, atol=1e-10)
    assert reference.shape == (11, 3)


def test_kernel_rejects_bad_arguments():
    basis = build_basis(0.5, 3)
    with pytest.raises(InvalidParameterError):
        kernel_eta(basis, 4, 0.1, 0.2)
    with pytest.raises(InvalidParameterError):
        kernel_eta(basis, 3, 0.1, 1.0)
    with pytest.raises(InvalidParameterError):
        kernel_eta(basis, 3, 0.1, 0.2, form='other')


def test_periodogram_grid_matches_direct_sum():
    x = np.random.default_rng(0).standard_normal(40)
    size = 64
    lam = 2 * np.pi * np.arange(size) / size
    assert_allclose(periodogram_grid(x, size), periodogram(x, lam), rtol=1e-10, atol=1e-12)
    assert isinstance(periodogram(x, 0.3), float)


def test_covariance_and_periodogram_forms_agree(case1_series):
    fitted = estimate(case1_series, EstimatorConfig(alpha=0.5))
    x = np.array([-0.5, 0.0, 0.5, 0.96])
    assert_allclose(periodogram_estimate(case1_series, fitted, x), fitted.evaluate(x), atol=1e-4)


def test_kernel_growth_diagnostic():
    result = kernel_growth(0.5, 0.42, 0.5, [100, 1000, 10000, 100000], n_freq=1024)
    assert result['Kn'] == [truncation_Kn(n, 0.42) for n in result['n_values']]
    assert np.isfinite(result['slope'])
    assert result['bound'] == pytest.approx(0.42 * np.log(1 + np.sqrt(2)))
    assert set(result) >= {'maxima', 'passes'}
    with pytest.raises(InvalidParameterError):
        kernel_growth(0.5, 0.42, 0.5, [100, 100])


@pytest.mark.parametrize('x', [-0.5, 0.0, 0.5, 0.96])
def test_kernel_growth_is_sublinear(x):
    result = kernel_growth(0.5, 0.42, x, [2 ** p for p in range(8, 15)])
    assert result['Kn'] == [2, 2, 2, 3, 3, 3, 4]
    assert 0.0 < result['slope'] < 1.0
    if x == 0.0:
        assert result['passes']


def test_scaling_the_series_leaves_the_estimate_unchanged(case1_series):
    values = case1_series.values
    config = EstimatorConfig(alpha=0.5)
    fitted = estimate(values, config)
    scaled = estimate(3.0 * values, config)
    assert_allclose(sample_autocovariances(3.0 * values, 6), 9.0 * sample_autocovariances(values, 6), rtol=1e-12)
    assert scaled.sigma_eps2_hat == pytest.approx(9.0 * fitted.sigma_eps2_hat, rel=1e-12)
    assert_allclose(scaled.zeta_hat, 9.0 * fitted.zeta_hat, rtol=1e-12, atol=1e-12)
    x = np.linspace(-0.95, 0.95, 39)
    assert_allclose(scaled.evaluate(x), fitted.evaluate(x), rtol=1e-12, atol=1e-12)


def test_white_noise_gives_the_weight_shape():
    noise = np.random.default_rng(8).standard_normal(20000)
    autocov = sample_autocovariances(noise, 6)
    assert np.all(np.abs(autocov[1:5] - autocov[3:7]) < 0.05)

    fitted = estimate(noise, EstimatorConfig(alpha=0.5, kn_override=1))
    basis = build_basis(0.5, 1)
    x = np.linspace(-0.95, 0.95, 39)
    values = fitted.evaluate(x)
    assert np.all(np.isfinite(values))
    assert abs(fitted.mass() - 1.0) < 1e-6
    assert_allclose(values, basis.weight(x) * basis.coefficients[0, 0] ** 2, atol=0.15)


def test_coefficient_error_shrinks_with_n():
    m = build_mixture(case_mixture_descriptor(1))
    basis = build_basis(0.5, 3)
    target = m.gegenbauer_coefficients(basis)
    mse = []
    for n in (500, 1500, 5000):
        synthesizer = GaussianSynthesizer(m, n, 1.0)
        errors = []
        for seed in range(200):
            autocov = sample_autocovariances(synthesizer.sample(seed), 5)
            errors.append(basis.coefficients @ (autocov[:4] - autocov[2:6]) - target)
        mse.append(np.mean(np.square(errors), axis=0))
    mse = np.array(mse)
    assert np.all(mse[1] < mse[0])
    assert np.all(mse[2] < mse[1])
