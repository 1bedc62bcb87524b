import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import gamma

from mixture_estimation.exceptions import InvalidParameterError, VarianceConventionError
from mixture_estimation.services.ma_repr import (
    MACoefficients,
    cepstral_g,
    compose_psi,
    farima_h,
    innovation_variance,
    ma_representation,
    tail_check,
)
from mixture_estimation.services.mixture import CompensatorMixture, SpectralDensity, farima_spectral


def ar1_spectrum(phi):
    """(1/2π) |1 - φ e^{iλ}|^{-2}, causal factor φ^j with unit innovation variance."""
    return SpectralDensity.analytic(lambda lam: 1.0 / (2 * np.pi * (1.0 - 2 * phi * np.cos(lam) + phi * phi)))


@pytest.fixture(scope='module')
def example_product():
    return ma_representation(0.2, CompensatorMixture(0.1, 0.8), 4096)


def test_farima_h_recursion():
    h = farima_h(0.3, 3)
    assert_allclose(h, [1.0, 0.3, 0.3 * 1.3 / 2, 0.3 * 1.3 * 2.3 / 6])
    with pytest.raises(InvalidParameterError):
        farima_h(0.5, 3)


def test_cepstral_factor_of_ar1():
    coeffs, sigma_g2 = cepstral_g(ar1_spectrum(0.5), 20)
    assert_allclose(coeffs, 0.5 ** np.arange(21), atol=1e-10)
    assert sigma_g2 == pytest.approx(1.0, rel=1e-10)


def test_cepstral_factor_of_ma1():
    g = SpectralDensity.analytic(lambda lam: (1.0 + 0.6 * np.cos(lam) + 0.09) / (2 * np.pi))
    coeffs, sigma_g2 = cepstral_g(g, 5)
    assert_allclose(coeffs, [1.0, 0.3, 0.0, 0.0, 0.0, 0.0], atol=1e-10)
    assert sigma_g2 == pytest.approx(1.0, rel=1e-10)


def test_cepstral_factor_rejects_nonpositive_density():
    with pytest.raises(InvalidParameterError):
        cepstral_g(SpectralDensity.analytic(lambda lam: np.cos(lam)), 4)


def test_compose_psi():
    psi = compose_psi(np.array([1.0, 0.5, 0.25]), np.array([1.0, 1.0, 0.0]))
    assert_allclose(psi, [1.0, 1.5, 0.75])
    with pytest.raises(InvalidParameterError):
        compose_psi(np.ones(3), np.ones(4))


@pytest.mark.parametrize("d", [0.1, 0.25, 0.4])
def test_kolmogorov_variance_of_farima(d):
    assert innovation_variance(SpectralDensity.farima(d)) == pytest.approx(1.0, abs=1e-6)


def test_ma_representation_with_analytic_factor():
    d, J = 0.3, 512
    result = ma_representation(d, ar1_spectrum(0.5), J)
    expected = np.convolve(farima_h(d, J), 0.5 ** np.arange(J + 1))[:J + 1]
    assert_allclose(result.psi, expected, rtol=1e-8, atol=1e-11)
    assert result.sigma2 == pytest.approx(1.0 / (2 * np.pi), rel=1e-8)
    assert result.table().shape == (J + 1, 4)

    lam = np.array([1.0, 2.0])
    truth = farima_spectral(lam, d) * ar1_spectrum(0.5)(lam)
    assert_allclose(result.reconstruct(lam), truth, rtol=5e-2)


def test_variance_relation_mismatch_raises():
    coefficients = MACoefficients(psi=np.ones(3), h=np.ones(3), g=np.ones(3), sigma2=1.0, sigma_g2=1.0, d=0.2)
    with pytest.raises(VarianceConventionError):
        coefficients.check_variance_relation()


def test_tail_check_of_farima_coefficients():
    d = 0.3
    result = tail_check(farima_h(d, 4096), d)
    assert result.exponent == pytest.approx(d - 1.0, abs=0.05)
    assert result.difference_exponent <= d - 2.0 + 0.1
    assert result.passes
    assert result.square_sum_increment > 0
    with pytest.raises(InvalidParameterError):
        tail_check(np.ones(50), d)


def test_example_product_asymptotics(example_product):
    d, j = 0.2, 2000
    ratio = example_product.psi[j] * j ** (1 - d) * gamma(d) / example_product.g.sum()
    assert 0.95 <= ratio <= 1.05
    assert example_product.g[0] == 1.0
    summary = example_product.summary()
    assert summary['tail_check']['difference_exponent'] <= d - 2.0 + 0.1
    assert summary['sigma2'] == pytest.approx(summary['sigma_g2'] / (2 * np.pi), rel=1e-8)


def test_cepstral_factor_of_compensator_spectrum():
    g = SpectralDensity.from_mixture(CompensatorMixture(0.1, 0.8), 1.0)
    coeffs, sigma_g2 = cepstral_g(g, 200)
    lam = np.linspace(0.05, np.pi, 25)
    transfer = np.exp(1j * np.outer(lam, np.arange(201))) @ coeffs
    assert_allclose(sigma_g2 / (2 * np.pi) * np.abs(transfer) ** 2, g(lam), rtol=1e-6)

    block_maxima = np.abs(coeffs[:100]).reshape(5, 20).max(axis=1)
    assert np.all(np.diff(block_maxima) < 0)
    assert np.abs(coeffs[100:]).max() < 1e-4


def test_tail_check_rejects_geometric_decay():
    result = tail_check(0.9 ** np.arange(4097), 0.2)
    assert not result.exponent_ok
    assert not result.passes
    assert result.to_dict()['passes'] is False


def test_example_product_reconstructs_spectrum(example_product):
    lam = np.linspace(0.2, np.pi, 30)
    g = SpectralDensity.from_mixture(CompensatorMixture(0.1, 0.8), 1.0)
    truth = farima_spectral(lam, 0.2) * g(lam)
    assert_allclose(example_product.reconstruct(lam), truth, rtol=0.02)
