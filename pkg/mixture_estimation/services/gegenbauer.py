"""
Orthonormal Gegenbauer basis on [-1, 1] with weight (1 - x^2)^alpha.
"""
import logging
from typing import Callable, Dict, Any, Optional

import numpy as np
from django.conf import settings
from numpy.polynomial import polynomial as P
from scipy.special import gammaln, roots_jacobi

from ..exceptions import InvalidParameterError
from .quadrature import integrate

logger = logging.getLogger(__name__)


class GegenbauerBasis:
    """
    Normalized polynomials G_k = C_k^{(alpha + 1/2)} / sqrt(gamma_k), k = 0..max_degree.

    ``coefficients[k, j]`` is g_kj, the coefficient of x^j in G_k.
    """

    def __init__(self, alpha: float, max_degree: int):
        alpha = float(alpha)
        max_degree = int(max_degree)
        if not np.isfinite(alpha) or alpha <= -0.5:
            raise InvalidParameterError(
                f"Gegenbauer index alpha must exceed -1/2, got {alpha}", alpha=alpha
            )
        if max_degree < 0:
            raise InvalidParameterError(f"Degree must be non-negative, got {max_degree}")
        limit = getattr(settings, 'MAX_GEGENBAUER_DEGREE', 30)
        if max_degree > limit:
            raise InvalidParameterError(
                f"Degree {max_degree} exceeds {limit}; monomial coefficients lose all precision",
                max_degree=max_degree,
            )

        self.alpha = alpha
        self.max_degree = max_degree
        self.norms = self._norms(alpha, max_degree)
        raw = self._raw_coefficients(alpha + 0.5, max_degree)
        self.coefficients = raw / np.sqrt(self.norms)[:, None]

    @staticmethod
    def _norms(alpha: float, max_degree: int) -> np.ndarray:
        k = np.arange(max_degree + 1)
        log_gamma = (
            np.log(np.pi) - 2 * alpha * np.log(2.0)
            + gammaln(k + 2 * alpha + 1)
            - np.log(k + alpha + 0.5)
            - 2 * gammaln(alpha + 0.5)
            - gammaln(k + 1)
        )
        return np.exp(log_gamma)

    @staticmethod
    def _raw_coefficients(lam: float, max_degree: int) -> np.ndarray:
        # Three-term recurrence for C_k^{(lam)}
        table = np.zeros((max_degree + 1, max_degree + 1))
        rows = [np.array([1.0]), np.array([0.0, 2.0 * lam])]
        for k in range(2, max_degree + 1):
            first = P.polymulx(rows[k - 1]) * (2.0 * (k + lam - 1))
            second = np.pad(rows[k - 2], (0, 2)) * (k + 2 * lam - 2)
            rows.append((first - second) / k)
        for k in range(max_degree + 1):
            table[k, :len(rows[k])] = rows[k]
        return table

    def _check_degree(self, k: int):
        if not 0 <= k <= self.max_degree:
            raise InvalidParameterError(f"Degree {k} outside 0..{self.max_degree}")

    def evaluate(self, k: int, x) -> np.ndarray:
        """G_k at x (real or complex) by Horner's scheme on the monomial coefficients."""
        self._check_degree(k)
        return P.polyval(np.asarray(x), self.coefficients[k, :k + 1])

    def evaluate_all(self, x) -> np.ndarray:
        """Matrix with rows G_0(x), ..., G_K(x)."""
        x = np.asarray(x)
        return np.stack([self.evaluate(k, x) for k in range(self.max_degree + 1)])

    def weight(self, x) -> np.ndarray:
        return (1.0 - np.asarray(x) ** 2) ** self.alpha

    def gauss_rule(self, m: int):
        """Gauss-Gegenbauer nodes and weights for (1 - x^2)^alpha, exact to degree 2m - 1."""
        return roots_jacobi(m, self.alpha, self.alpha)

    def project(self, f: Callable[[np.ndarray], np.ndarray], k: int, strict: Optional[bool] = None) -> float:
        """
        Coefficient <f, G_k> = ∫ f(x) G_k(x) (1 - x^2)^alpha dx.

        ``strict`` raises QuadratureError when the rule does not settle; None
        defers to the QUADRATURE_STRICT setting.
        """
        self._check_degree(k)
        coeffs = self.coefficients[k, :k + 1]

        def integrand(x):
            return np.asarray(f(x)) * P.polyval(x, coeffs)

        result = integrate(integrand, -1.0, 1.0, self.alpha, self.alpha, strict=strict)
        return float(result.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha': self.alpha,
            'max_degree': self.max_degree,
            'norms': self.norms.tolist(),
        }


def build_basis(alpha: float, max_degree: int) -> GegenbauerBasis:
    return GegenbauerBasis(alpha, max_degree)


def evaluate(basis: GegenbauerBasis, k: int, x) -> np.ndarray:
    return basis.evaluate(k, x)


def project(basis: GegenbauerBasis, f: Callable[[np.ndarray], np.ndarray], k: int, strict: Optional[bool] = None) -> float:
    return basis.project(f, k, strict)
