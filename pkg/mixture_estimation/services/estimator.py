"""
Gegenbauer-expansion estimator of the mixture density from one aggregated series.
"""
import logging
import math
from dataclasses import dataclass, asdict, field
from typing import Optional, Dict, Any, List

import numpy as np
from django.conf import settings
from scipy import stats

from ..exceptions import InvalidParameterError, DegenerateSampleError
from .gegenbauer import GegenbauerBasis, build_basis
from .quadrature import chebyshev_grid

logger = logging.getLogger(__name__)

# (2 log(1 + sqrt 2))^{-1}
GAMMA_BOUND = 1.0 / (2.0 * math.log(1.0 + math.sqrt(2.0)))


def _values(series) -> np.ndarray:
    values = getattr(series, 'values', series)
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise InvalidParameterError("Series must be one-dimensional")
    return values


@dataclass
class EstimatorConfig:
    alpha: Optional[float] = None
    gamma: float = field(default_factory=lambda: getattr(settings, 'DEFAULT_GAMMA', 0.42))
    kn_override: Optional[int] = None
    d: Optional[float] = None
    use_alpha_rule: bool = False

    def __post_init__(self):
        if not 0 < self.gamma < GAMMA_BOUND:
            raise InvalidParameterError(
                f"gamma must lie in (0, {GAMMA_BOUND:.4f}), got {self.gamma}", gamma=self.gamma
            )
        if self.kn_override is not None and self.kn_override < 0:
            raise InvalidParameterError(f"Kn override must be non-negative, got {self.kn_override}")
        if self.alpha is None and self.d is None:
            raise InvalidParameterError("Either alpha or d (for the alpha rule) is required")

    def resolved_alpha(self) -> float:
        if self.d is not None and (self.use_alpha_rule or self.alpha is None):
            return alpha_rule(self.d)
        return float(self.alpha)

    def consistency_warnings(self, alpha: float) -> List[str]:
        """Violations of the parameter conditions of the consistency theorem (known d only)."""
        if self.d is None:
            return []
        d = self.d
        problems = []
        if not -0.5 < alpha < 2.5 - 4 * d:
            problems.append(f"alpha={alpha} outside (-1/2, 5/2 - 4d) for d={d}")
        limit = GAMMA_BOUND * (1.0 - max(alpha + 4 * d - 1.5, 0.0))
        if not self.gamma < limit:
            problems.append(f"gamma={self.gamma} not below {limit:.4f} for alpha={alpha}, d={d}")
        return problems

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def alpha_rule(d: float) -> float:
    """α = 1 - 2d."""
    if not 0 < d < 0.5:
        raise InvalidParameterError(f"d must lie in (0, 1/2), got {d}", d=d)
    return 1.0 - 2.0 * d


def truncation_Kn(n: int, gamma: float) -> int:
    """K_n = floor(γ log n)."""
    if n < 2:
        raise InvalidParameterError(f"Series length must be at least 2, got {n}")
    if not 0 < gamma < GAMMA_BOUND:
        raise InvalidParameterError(f"gamma must lie in (0, {GAMMA_BOUND:.4f}), got {gamma}", gamma=gamma)
    # Guard against round-down when γ log n is an integer in exact arithmetic
    return int(math.floor(gamma * math.log(n) + 1e-9))


def sample_autocovariances(series, max_lag: int) -> np.ndarray:
    """σ̂(0..max_lag) with divisor n."""
    x = _values(series)
    n = len(x)
    if not 0 <= max_lag < n:
        raise InvalidParameterError(f"Lag {max_lag} requires a series longer than {n}")
    return np.array([np.dot(x[:n - j], x[j:]) for j in range(max_lag + 1)]) / n


def sample_autocov(series, j: int) -> float:
    return float(sample_autocovariances(series, j)[j])


def sigma_eps2_hat(series) -> float:
    """σ̂(0) - σ̂(2); negative values are returned and logged."""
    x = _values(series)
    if len(x) < 3:
        raise InvalidParameterError("Innovation variance estimate needs n >= 3")
    autocov = sample_autocovariances(x, 2)
    value = float(autocov[0] - autocov[2])
    if value <= 0:
        logger.warning(f"Nonpositive innovation variance estimate {value:.6g}")
    return value


def zeta_hat(series, basis: GegenbauerBasis, k: int) -> float:
    x = _values(series)
    if not 0 <= k <= basis.max_degree:
        raise InvalidParameterError(f"Degree {k} outside basis range 0..{basis.max_degree}")
    if k + 2 >= len(x):
        raise InvalidParameterError(f"Series of length {len(x)} too short for degree {k}")
    autocov = sample_autocovariances(x, k + 2)
    return float(basis.coefficients[k, :k + 1] @ (autocov[:k + 1] - autocov[2:k + 3]))


class MixtureEstimate:
    """
    φ̂_n(x) = σ̂_ε^{-2} (1 - x^2)^α Σ_{k <= K_n} ζ̂_k G_k(x), immutable.
    """

    def __init__(self, basis: GegenbauerBasis, zeta: np.ndarray, sigma_eps2: float,
                 autocov: np.ndarray, n: int, config: EstimatorConfig):
        self.basis = basis
        self.alpha = basis.alpha
        self.Kn = basis.max_degree
        self.zeta_hat = zeta
        self.sigma_eps2_hat = sigma_eps2
        self.autocov = autocov
        self.n = n
        self.config = config

    def __call__(self, x, clip: bool = False):
        return self.evaluate(x, clip=clip)

    def evaluate(self, x, clip: bool = False):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) >= 1.0):
            raise InvalidParameterError("The estimate is defined on (-1, 1)")
        series_part = self.zeta_hat @ self.basis.evaluate_all(np.atleast_1d(x))
        values = self.basis.weight(np.atleast_1d(x)) * series_part / self.sigma_eps2_hat
        if clip:
            values = np.maximum(values, 0.0) / self.clipped_mass()
        return float(values[0]) if x.ndim == 0 else values

    def mass(self) -> float:
        """∫ φ̂_n, computed with a Gauss rule exact for the polynomial part."""
        nodes, weights = self.basis.gauss_rule(self.Kn + 2)
        return float(weights @ (self.zeta_hat @ self.basis.evaluate_all(nodes)) / self.sigma_eps2_hat)

    def clipped_mass(self) -> float:
        x, w = chebyshev_grid(getattr(settings, 'ESTIMATE_GRID_SIZE', 512))
        return float(w @ np.maximum(self.evaluate(x), 0.0))

    def grid(self, size: Optional[int] = None, clip: bool = False):
        """Chebyshev-point export (x, φ̂_n(x), Fejér weights)."""
        size = size or getattr(settings, 'ESTIMATE_GRID_SIZE', 512)
        x, weights = chebyshev_grid(size)
        return x, self.evaluate(x, clip=clip), weights

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha': self.alpha,
            'Kn': self.Kn,
            'n': self.n,
            'zeta_hat': self.zeta_hat.tolist(),
            'sigma_eps2_hat': self.sigma_eps2_hat,
            'autocov': self.autocov.tolist(),
            'config': self.config.to_dict(),
            'grid': {'kind': 'chebyshev-first-kind', 'size': getattr(settings, 'ESTIMATE_GRID_SIZE', 512)},
        }


def estimate(series, config: EstimatorConfig) -> MixtureEstimate:
    x = _values(series)
    n = len(x)
    Kn = config.kn_override if config.kn_override is not None else truncation_Kn(n, config.gamma)
    if Kn + 2 >= n:
        raise InvalidParameterError(f"Series of length {n} too short for K_n={Kn}", n=n, Kn=Kn)
    alpha = config.resolved_alpha()
    for problem in config.consistency_warnings(alpha):
        logger.warning(f"Consistency conditions violated: {problem}")

    basis = build_basis(alpha, Kn)
    autocov = sample_autocovariances(x, Kn + 2)
    sigma2 = float(autocov[0] - autocov[2])
    if sigma2 <= 0:
        logger.warning(f"Degenerate sample: sigma_eps2_hat={sigma2:.6g} (n={n})")
        raise DegenerateSampleError(
            f"Innovation variance estimate {sigma2:.6g} is not positive", sigma_eps2_hat=sigma2, n=n
        )
    zeta = basis.coefficients @ (autocov[:Kn + 1] - autocov[2:Kn + 3])
    return MixtureEstimate(basis, zeta, sigma2, autocov, n, config)


def periodogram(series, lam):
    """I_n(λ) = (2πn)^{-1} |Σ_j X_j e^{ijλ}|^2."""
    x = _values(series)
    n = len(x)
    lam = np.asarray(lam, dtype=float)
    t = np.arange(1, n + 1)
    transform = np.exp(1j * np.outer(np.atleast_1d(lam), t)) @ x
    values = np.abs(transform) ** 2 / (2 * np.pi * n)
    return float(values[0]) if lam.ndim == 0 else values


def periodogram_grid(series, size: int):
    """I_n at λ_l = 2πl/size, l = 0..size-1, via FFT."""
    x = _values(series)
    return np.abs(np.fft.fft(x, size)) ** 2 / (2 * np.pi * len(x))


def kernel_eta(basis: GegenbauerBasis, Kn: int, lam, x, form: str = 'coefficients'):
    """
    η_n(λ; x) = (1 - x^2)^α Σ_k G_k(x) Σ_j g_kj (e^{iλj} - e^{iλ(j+2)}).

    ``form='polynomial'`` uses (1 - e^{2iλ}) Σ_k G_k(x) G_k(e^{iλ}) instead.
    Returns an array of shape (len(lam), len(x)), squeezed for scalars.
    """
    if Kn > basis.max_degree:
        raise InvalidParameterError(f"K_n={Kn} exceeds basis degree {basis.max_degree}")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x_arr) >= 1):
        raise InvalidParameterError("kernel_eta requires |x| < 1")

    g = basis.coefficients[:Kn + 1, :Kn + 1]
    if form == 'coefficients':
        j = np.arange(Kn + 1)
        waves = np.exp(1j * np.outer(lam_arr, j)) - np.exp(1j * np.outer(lam_arr, j + 2))
        inner = waves @ g.T
    elif form == 'polynomial':
        z = np.exp(1j * lam_arr)
        inner = (1.0 - z ** 2)[:, None] * np.stack([basis.evaluate(k, z) for k in range(Kn + 1)], axis=1)
    else:
        raise InvalidParameterError(f"Unknown kernel form {form!r}")

    outer = basis.weight(x_arr)[None, :] * np.stack([basis.evaluate(k, x_arr) for k in range(Kn + 1)])
    eta = inner @ outer
    if np.ndim(lam) == 0 and np.ndim(x) == 0:
        return complex(eta[0, 0])
    return eta.squeeze()


def periodogram_estimate(series, fitted: MixtureEstimate, x):
    """
    φ̂_n(x) from σ̂_ε^{-2} ∫ η_n(λ; x) I_n(λ) dλ.

    The integrand is a trigonometric polynomial, so an FFT grid with more
    than n + K_n + 1 points integrates it exactly.
    """
    values = _values(series)
    n = len(values)
    size = 1 << int(math.ceil(math.log2(n + fitted.Kn + 3)))
    lam = 2 * np.pi * np.arange(size) / size
    intensity = periodogram_grid(values, size)
    eta = np.atleast_2d(kernel_eta(fitted.basis, fitted.Kn, lam, np.atleast_1d(x)).reshape(size, -1))
    integral = (2 * np.pi / size) * (intensity @ eta.real)
    result = integral / fitted.sigma_eps2_hat
    return float(result[0]) if np.ndim(x) == 0 else result


def kernel_growth(alpha: float, gamma: float, x: float, n_values, n_freq: int = 4096) -> Dict[str, Any]:
    """
    Growth of max_λ |η_n(λ; x)| |λ|^{(2α-3)/4} with n, fitted on a log-log scale
    and compared with the rate n^{γ log(1+√2)}.
    """
    n_values = sorted(set(int(n) for n in n_values))
    if len(n_values) < 2:
        raise InvalidParameterError("Kernel growth needs at least two distinct n")
    lam = np.linspace(np.pi / n_freq, np.pi, n_freq)
    exponent = (2 * alpha - 3) / 4
    maxima, degrees = [], []
    for n in n_values:
        Kn = truncation_Kn(n, gamma)
        basis = build_basis(alpha, Kn)
        eta = np.abs(kernel_eta(basis, Kn, lam, x))
        maxima.append(float(np.max(eta * lam ** exponent)))
        degrees.append(Kn)
    fit = stats.linregress(np.log(n_values), np.log(maxima))
    bound = gamma * math.log(1.0 + math.sqrt(2.0))
    return {
        'n_values': n_values,
        'Kn': degrees,
        'maxima': maxima,
        'slope': float(fit.slope),
        'bound': bound,
        'passes': bool(fit.slope <= bound + 0.05),
    }
