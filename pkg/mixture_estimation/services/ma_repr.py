"""
Moving-average (Wold) representation of long-memory spectral densities.

The FARIMA factor has explicit coefficients h_j; the short-memory factor g is
factorized through its cepstrum; the two are composed by convolution.
"""
import logging
from dataclasses import dataclass, asdict
from typing import Dict, Any, Union

import numpy as np
from django.conf import settings
from scipy import stats

from ..exceptions import InvalidParameterError, DivergentIntegralError, VarianceConventionError
from .mixture import MixtureDensity, SpectralDensity
from .quadrature import integrate_adaptive

logger = logging.getLogger(__name__)

VARIANCE_RELATION_TOL = 1e-8


def farima_h(d: float, J: int) -> np.ndarray:
    """h_0 = 1, h_j = h_{j-1} (j - 1 + d)/j."""
    if not 0 < d < 0.5:
        raise InvalidParameterError(f"d must lie in (0, 1/2), got {d}", d=d)
    if J < 0:
        raise InvalidParameterError(f"J must be non-negative, got {J}")
    j = np.arange(1, J + 1)
    return np.concatenate([[1.0], np.cumprod((j - 1 + d) / j)])


def cepstral_g(g: SpectralDensity, J: int):
    """
    Causal factor of an analytic spectral density.

    g(λ) = (σ_g²/2π) |Σ_j g_j e^{ijλ}|² with g_0 = 1.

    Returns:
        Tuple (g_j for j = 0..J, σ_g²)
    """
    size = getattr(settings, 'CEPSTRAL_GRID_SIZE', 16384)
    if not 0 <= J <= size // 2:
        raise InvalidParameterError(f"J must lie in 0..{size // 2}, got {J}")
    half = np.asarray(g(2 * np.pi * np.arange(size // 2 + 1) / size), dtype=float)
    if not np.all(np.isfinite(half)) or np.any(half <= 0):
        raise InvalidParameterError("Spectral density must be positive and finite on the cepstral grid")
    values = np.concatenate([half, half[-2:0:-1]])
    cepstrum = np.fft.ifft(np.log(values)).real

    # exp of the one-sided cepstrum as a power series
    weighted = np.arange(J + 1) * cepstrum[:J + 1]
    coeffs = np.zeros(J + 1)
    coeffs[0] = 1.0
    for j in range(1, J + 1):
        coeffs[j] = np.dot(weighted[1:j + 1], coeffs[j - 1::-1]) / j
    sigma_g2 = 2 * np.pi * np.exp(cepstrum[0])
    return coeffs, float(sigma_g2)


def compose_psi(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if h.shape != g.shape or h.ndim != 1:
        raise InvalidParameterError("compose_psi needs two vectors of equal length")
    psi = np.convolve(h, g)[:len(h)]
    return psi / psi[0]


def innovation_variance(f: SpectralDensity) -> float:
    """
    σ² = 2π exp{(1/2π) ∫ log f}, integrating over (0, π] with λ = π e^{-u}.
    """
    def integrand(u):
        # λ underflows for large u, where the integrand has long vanished
        lam = max(np.pi * np.exp(-u), np.finfo(float).tiny)
        return float(np.log(f(lam))) * lam

    value, _ = integrate_adaptive(integrand, 0.0, np.inf, tol=1e-13, limit=500)
    if not np.isfinite(value):
        raise DivergentIntegralError("log f is not integrable")
    return float(2 * np.pi * np.exp(value / np.pi))


@dataclass
class TailCheck:
    exponent: float
    difference_exponent: float
    square_sum_increment: float
    exponent_ok: bool
    difference_ok: bool

    @property
    def passes(self) -> bool:
        return self.exponent_ok and self.difference_ok

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), 'passes': self.passes}


def tail_check(psi: np.ndarray, d: float) -> TailCheck:
    """
    Log-log fits of |ψ_j| and |ψ_j - ψ_{j+1}| over the last decade of indices.
    """
    psi = np.asarray(psi, dtype=float)
    if len(psi) < 100:
        raise InvalidParameterError(f"tail_check needs at least 100 coefficients, got {len(psi)}")
    J = len(psi) - 1
    j = np.arange(J // 10, J)
    log_j = np.log(j)
    fit = stats.linregress(log_j, np.log(np.maximum(np.abs(psi[j]), 1e-300)))
    diff_fit = stats.linregress(log_j, np.log(np.maximum(np.abs(psi[j] - psi[j + 1]), 1e-300)))
    increment = float(np.sum(psi[J // 10:] ** 2))
    result = TailCheck(
        exponent=float(fit.slope),
        difference_exponent=float(diff_fit.slope),
        square_sum_increment=increment,
        exponent_ok=bool(abs(fit.slope - (d - 1.0)) <= 0.05),
        difference_ok=bool(diff_fit.slope <= d - 2.0 + 0.1),
    )
    if not result.passes:
        logger.info(f"Tail check failed for d={d}: {result.to_dict()}")
    return result


@dataclass
class MACoefficients:
    psi: np.ndarray
    h: np.ndarray
    g: np.ndarray
    sigma2: float
    sigma_g2: float
    d: float

    def reconstruct(self, lam) -> np.ndarray:
        """(σ²/2π) |Σ ψ_j e^{ijλ}|²."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        transfer = np.exp(1j * np.outer(lam, np.arange(len(self.psi)))) @ self.psi
        return self.sigma2 / (2 * np.pi) * np.abs(transfer) ** 2

    def check_variance_relation(self, tol: float = VARIANCE_RELATION_TOL):
        """The Kolmogorov σ² of f_d·g must equal σ_g²/(2π)."""
        expected = self.sigma_g2 / (2 * np.pi)
        mismatch = abs(self.sigma2 - expected) / expected
        if mismatch > tol:
            logger.error(f"Variance conventions disagree: sigma2={self.sigma2!r}, sigma_g2/2pi={expected!r}")
            raise VarianceConventionError(
                f"sigma2 and sigma_g2/(2 pi) differ by {mismatch:.3g} (relative)",
                sigma2=self.sigma2, sigma_g2=self.sigma_g2,
            )

    def table(self) -> np.ndarray:
        """Columns j, h_j, g_j, ψ_j."""
        return np.column_stack([np.arange(len(self.psi)), self.h, self.g, self.psi])

    def summary(self) -> Dict[str, Any]:
        return {
            'J': len(self.psi) - 1,
            'd': self.d,
            'sigma2': self.sigma2,
            'sigma_g2': self.sigma_g2,
            'sum_g': float(np.sum(self.g)),
            'tail_check': tail_check(self.psi, self.d).to_dict() if len(self.psi) >= 100 else None,
        }


def ma_representation(d: float, g: Union[SpectralDensity, MixtureDensity], J: int) -> MACoefficients:
    """MA(∞) coefficients of f(λ; d)·g(λ) truncated at J."""
    J = min(int(J), getattr(settings, 'MA_MAX_LAGS', 4096))
    if isinstance(g, MixtureDensity):
        g = SpectralDensity.from_mixture(g, 1.0)
    h = farima_h(d, J)
    coeffs, sigma_g2 = cepstral_g(g, J)
    psi = compose_psi(h, coeffs)
    sigma2 = innovation_variance(SpectralDensity.product(SpectralDensity.farima(d), g))
    result = MACoefficients(psi=psi, h=h, g=coeffs, sigma2=sigma2, sigma_g2=sigma_g2, d=d)
    result.check_variance_relation()
    logger.info(f"MA representation d={d}, J={J}: sigma2={sigma2:.10g}, sum g={np.sum(coeffs):.10g}")
    return result
