import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import beta as beta_fn

from mixture_estimation.exceptions import InvalidParameterError, QuadratureError
from mixture_estimation.services.quadrature import (
    chebyshev_grid,
    integrate,
    integrate_adaptive,
    jacobi_rule,
)


@pytest.mark.parametrize("p,q", [(0.5, 0.5), (1.2, 1.6), (0.3, 2.5), (3.0, 1.5)])
def test_beta_integrals_exact(p, q):
    result = integrate(np.ones_like, 0.0, 1.0, p - 1.0, q - 1.0)
    assert result.converged
    assert_allclose(result.value, beta_fn(p, q), rtol=1e-12)


def test_mapped_interval_scales_weights():
    kappa, a = 0.1, 0.8
    result = integrate(np.ones_like, -a, 0.0, 0.0, kappa)
    assert_allclose(result.value, a ** (kappa + 1) / (kappa + 1), rtol=1e-12)


def test_vector_integrand_columns():
    powers = np.array([0.0, 1.0, 2.0, 5.0])
    result = integrate(lambda x: x[:, None] ** powers[None, :], 0.0, 1.0)
    assert result.value.shape == (4,)
    assert_allclose(result.value, 1.0 / (powers + 1.0), rtol=1e-12)


def test_cap_reached_returns_unconverged():
    result = integrate(lambda x: np.abs(x - 0.3) ** 0.5, 0.0, 1.0, tol=1e-15, max_nodes=64)
    assert not result.converged
    assert result.nodes == 64


def test_strict_cap_raises():
    with pytest.raises(QuadratureError) as excinfo:
        integrate(lambda x: np.abs(x - 0.3) ** 0.5, 0.0, 1.0, tol=1e-15, max_nodes=64, strict=True)
    assert excinfo.value.code == 'quadrature_nonconvergence'
    assert excinfo.value.achieved_error > 0


@pytest.mark.parametrize("left,right", [(-1.0, 0.0), (0.0, -1.5)])
def test_jacobi_rule_rejects_nonintegrable_weight(left, right):
    with pytest.raises(InvalidParameterError):
        jacobi_rule(0.0, 1.0, left, right, 8)


def test_jacobi_rule_rejects_empty_interval():
    with pytest.raises(InvalidParameterError):
        jacobi_rule(1.0, 1.0, 0.0, 0.0, 8)


def test_integrate_adaptive_algebraic_weight():
    value, abserr = integrate_adaptive(lambda x: 1.0, 0.0, 1.0, -0.5, 0.0)
    assert value == pytest.approx(2.0, rel=1e-10)
    assert abserr < 1e-8


def test_chebyshev_grid():
    x, w = chebyshev_grid(64)
    assert np.all(np.diff(x) > 0)
    assert np.all(np.abs(x) < 1)
    assert w.sum() == pytest.approx(2.0, rel=1e-13)
    assert w @ x ** 2 == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert w @ x ** 3 == pytest.approx(0.0, abs=1e-14)


def test_chebyshev_grid_too_small():
    with pytest.raises(InvalidParameterError):
        chebyshev_grid(1)
