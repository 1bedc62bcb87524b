"""
Mixture densities of the random AR(1) coefficient and their forward maps.

Every family is stored as a list of pieces, each piece being

    φ(x) = (x - lo)^left_exp (hi - x)^right_exp smooth(x),   lo <= x <= hi,

so the covariance, spectral density and integrability diagnostics all go
through the same Gauss-Jacobi machinery with the singular factors in the
weight.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, asdict
from typing import Callable, Dict, Any, List, Optional, Sequence

import numpy as np
from django.core.cache import cache
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.special import beta as beta_fn, gamma, hyp2f1

from ..exceptions import InvalidParameterError
from .quadrature import QuadratureResult, combine_results, integrate, integrate_adaptive, jacobi_rule

logger = logging.getLogger(__name__)

# Lags/frequencies integrated per quadrature call
COLUMN_CHUNK = 512
# Width of the end pieces around the removable point x = 0 of a product mixture
PRODUCT_SPLIT = 1e-3


class _Constant:
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, x):
        return np.full(np.shape(x), self.value)


class _Squared:
    def __init__(self, smooth: Callable):
        self.smooth = smooth

    def __call__(self, x):
        return self.smooth(x) ** 2


class _LinearCell:
    def __init__(self, x0, x1, y0, y1):
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1

    def __call__(self, x):
        t = (np.asarray(x) - self.x0) / (self.x1 - self.x0)
        return self.y0 + t * (self.y1 - self.y0)


class DensityPiece:
    """One piece (x - lo)^left_exp (hi - x)^right_exp smooth(x) of a density."""

    def __init__(self, lo: float, hi: float, left_exp: float, right_exp: float, smooth: Callable):
        if not -1.0 <= lo < hi <= 1.0:
            raise InvalidParameterError(f"Piece [{lo}, {hi}] is not inside [-1, 1]")
        self.lo = float(lo)
        self.hi = float(hi)
        self.left_exp = float(left_exp)
        self.right_exp = float(right_exp)
        self.smooth = smooth

    def value(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return (x - self.lo) ** self.left_exp * (self.hi - x) ** self.right_exp * self.smooth(x)

    def covers(self, x: np.ndarray) -> np.ndarray:
        """Points of [lo, hi] where the piece is finite (singular endpoints excluded)."""
        above = (x > self.lo) | ((x == self.lo) & (self.left_exp >= 0))
        below = (x < self.hi) | ((x == self.hi) & (self.right_exp >= 0))
        return above & below

    def exponents(self, power: float = 0.0):
        """Endpoint exponents of φ(x)(1 - x^2)^power on this piece."""
        left = self.left_exp + (power if self.lo <= -1.0 else 0.0)
        right = self.right_exp + (power if self.hi >= 1.0 else 0.0)
        return left, right

    def is_integrable(self, power: float = 0.0) -> bool:
        left, right = self.exponents(power)
        return left > -1.0 and right > -1.0

    def integrate(self, func: Callable[[np.ndarray], np.ndarray], power: float = 0.0, strict: Optional[bool] = None):
        """∫ func(x) φ(x) (1 - x^2)^power dx over the piece."""
        left, right = self.exponents(power)
        at_left = self.lo <= -1.0
        at_right = self.hi >= 1.0

        def integrand(x):
            factor = self.smooth(x)
            if power:
                if at_left and at_right:
                    pass
                elif at_right:
                    factor = factor * (1.0 + x) ** power
                elif at_left:
                    factor = factor * (1.0 - x) ** power
                else:
                    factor = factor * (1.0 - x * x) ** power
            values = np.asarray(func(x))
            if values.ndim > 1:
                factor = factor.reshape((-1,) + (1,) * (values.ndim - 1))
            return values * factor

        return integrate(integrand, self.lo, self.hi, left, right, strict=strict)

    def cell_mass(self, a: float, b: float, nodes: int = 24) -> float:
        """Mass of the piece on a sub-interval [a, b], fixed-order rule."""
        touches_left = a <= self.lo
        touches_right = b >= self.hi
        left = self.left_exp if touches_left else 0.0
        right = self.right_exp if touches_right else 0.0
        x, w = jacobi_rule(a, b, left, right, nodes)
        values = self.smooth(x)
        if not touches_left:
            values = values * (x - self.lo) ** self.left_exp
        if not touches_right:
            values = values * (self.hi - x) ** self.right_exp
        return float(w @ values)

    def squared(self) -> 'DensityPiece':
        return DensityPiece(self.lo, self.hi, 2 * self.left_exp, 2 * self.right_exp, _Squared(self.smooth))


class _PieceSampler:
    """Inverse CDF of one piece on a Chebyshev-clustered cell grid."""

    CELLS = 256

    def __init__(self, piece: DensityPiece):
        self.piece = piece
        k = np.arange(self.CELLS + 1)
        t = 0.5 * (1.0 - np.cos(np.pi * k / self.CELLS))
        knots = piece.lo + (piece.hi - piece.lo) * t
        masses = np.array([piece.cell_mass(knots[i], knots[i + 1]) for i in range(self.CELLS)])
        masses = np.maximum(masses, 0.0)
        cdf = np.concatenate([[0.0], np.cumsum(masses)])
        self.mass = float(cdf[-1])
        if self.mass <= 0:
            raise InvalidParameterError(f"Piece [{piece.lo}, {piece.hi}] carries no mass")
        cdf /= self.mass
        self._x_first, self._c_first = knots[1], cdf[1]
        self._x_last, self._c_last = knots[-2], cdf[-2]
        inner_c = cdf[1:-1]
        inner_x = knots[1:-1]
        keep = np.concatenate([[True], np.diff(inner_c) > 0])
        self._interior = PchipInterpolator(inner_c[keep], inner_x[keep])

    def invert(self, u: np.ndarray) -> np.ndarray:
        piece = self.piece
        x = np.empty_like(u)
        low = u < self._c_first
        high = u > self._c_last
        mid = ~(low | high)
        # End cells follow the power law of the singular factor
        x[low] = piece.lo + (self._x_first - piece.lo) * (u[low] / self._c_first) ** (1.0 / (piece.left_exp + 1.0))
        x[high] = piece.hi - (piece.hi - self._x_last) * (
            (1.0 - u[high]) / (1.0 - self._c_last)
        ) ** (1.0 / (piece.right_exp + 1.0))
        x[mid] = self._interior(u[mid])
        return x


@dataclass
class IntegrabilityReport:
    alpha: float
    mixture_integral: Optional[float]
    mixture_finite: bool
    expansion_integral: Optional[float]
    expansion_finite: bool
    admissible: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class MixtureDensity:
    """
    Density φ on (-1, 1) of a random AR(1) coefficient.

    Subclasses provide ``family``, ``params()`` and ``_build_pieces()``.
    Instances are immutable once constructed.
    """

    family = 'mixture'

    def __init__(self):
        self._pieces: Optional[List[DensityPiece]] = None
        self._samplers: Optional[List[_PieceSampler]] = None

    def _build_pieces(self) -> List[DensityPiece]:
        raise NotImplementedError

    def params(self) -> Dict[str, Any]:
        raise NotImplementedError

    def pieces(self) -> List[DensityPiece]:
        if self._pieces is None:
            self._pieces = self._build_pieces()
        return self._pieces

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family, **self.params()}

    def cache_key(self, *extra) -> str:
        payload = json.dumps([self.to_dict(), *extra], sort_keys=True, default=float)
        return hashlib.md5(payload.encode('utf-8')).hexdigest()

    @property
    def natural_sigma_eps2(self) -> float:
        """Innovation variance under which the spectral density takes its reference form."""
        return 1.0

    @property
    def support(self):
        pieces = self.pieces()
        return min(p.lo for p in pieces), max(p.hi for p in pieces)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        assigned = np.zeros(x.shape, dtype=bool)
        for piece in self.pieces():
            mask = piece.covers(x) & ~assigned
            if np.any(mask):
                out[mask] = piece.value(x[mask])
                assigned |= mask
        return out

    def integrate_result(
        self, func: Callable[[np.ndarray], np.ndarray], power: float = 0.0, strict: Optional[bool] = None,
    ) -> QuadratureResult:
        """Like ``integrate`` but with the summed error and convergence flag of every piece."""
        return combine_results(piece.integrate(func, power, strict=strict) for piece in self.pieces())

    def integrate(self, func: Callable[[np.ndarray], np.ndarray], power: float = 0.0, strict: Optional[bool] = None):
        """∫ func(x) φ(x) (1 - x^2)^power dx summed over pieces."""
        return self.integrate_result(func, power, strict).value

    def _integrate_columns(self, builder: Callable, params: np.ndarray, power: float, strict: Optional[bool] = None) -> np.ndarray:
        results = []
        for start in range(0, len(params), COLUMN_CHUNK):
            chunk = params[start:start + COLUMN_CHUNK]
            results.append(np.atleast_1d(self.integrate(lambda x, c=chunk: builder(x, c), power, strict)))
        return np.concatenate(results) if results else np.array([])

    def mass(self) -> float:
        return float(self.integrate(np.ones_like))

    def mean(self) -> float:
        return float(self.integrate(lambda x: x))

    def _resolve_sigma(self, sigma_eps2: Optional[float]) -> float:
        sigma_eps2 = self.natural_sigma_eps2 if sigma_eps2 is None else float(sigma_eps2)
        if not sigma_eps2 > 0:
            raise InvalidParameterError(f"sigma_eps2 must be positive, got {sigma_eps2}")
        return sigma_eps2

    def covariance(self, h: int, sigma_eps2: Optional[float] = None, strict: Optional[bool] = None) -> float:
        """σ(h) = σ_ε² ∫ x^|h| φ(x)/(1 - x^2) dx."""
        sigma_eps2 = self._resolve_sigma(sigma_eps2)
        lag = abs(int(h))
        return sigma_eps2 * float(self.integrate(lambda x: x ** lag, power=-1.0, strict=strict))

    def autocovariances(self, n_lags: int, sigma_eps2: Optional[float] = None, strict: Optional[bool] = None) -> np.ndarray:
        """σ(0), ..., σ(n_lags - 1), cached per mixture descriptor."""
        sigma_eps2 = self._resolve_sigma(sigma_eps2)
        key = f"autocov:{self.cache_key(int(n_lags), sigma_eps2)}"
        cached = cache.get(key)
        if cached is not None:
            return cached
        lags = np.arange(int(n_lags), dtype=float)
        values = sigma_eps2 * self._integrate_columns(
            lambda x, c: x[:, None] ** c[None, :], lags, power=-1.0, strict=strict,
        )
        cache.set(key, values)
        return values

    def spectral(self, lam, sigma_eps2: Optional[float] = None, strict: Optional[bool] = None):
        """f(λ) = (σ_ε²/2π) ∫ φ(x) / (1 - 2x cos λ + x^2) dx, vectorized over λ."""
        sigma_eps2 = self._resolve_sigma(sigma_eps2)
        lam = np.asarray(lam, dtype=float)
        if np.any(np.abs(lam) > np.pi + 1e-12):
            raise InvalidParameterError("Frequencies must lie in [-pi, pi]")
        cosines = np.cos(np.abs(lam)).ravel()
        values = self._integrate_columns(
            lambda x, c: 1.0 / (1.0 - 2.0 * x[:, None] * c[None, :] + x[:, None] ** 2),
            cosines, power=0.0, strict=strict,
        )
        result = sigma_eps2 / (2 * np.pi) * values.reshape(lam.shape)
        return float(result) if result.ndim == 0 else result

    def check_integrability(self, alpha: float) -> IntegrabilityReport:
        pieces = self.pieces()
        mixture_finite = all(p.is_integrable(-1.0) for p in pieces)
        mixture_integral = float(self.integrate(np.ones_like, power=-1.0)) if mixture_finite else None

        squared = [p.squared() for p in pieces]
        expansion_finite = all(p.is_integrable(-alpha) for p in squared)
        expansion_integral = None
        if expansion_finite:
            expansion_integral = float(sum(p.integrate(np.ones_like, power=-alpha).value for p in squared))

        report = IntegrabilityReport(
            alpha=float(alpha),
            mixture_integral=mixture_integral,
            mixture_finite=mixture_finite,
            expansion_integral=expansion_integral,
            expansion_finite=expansion_finite,
            admissible=mixture_finite and expansion_finite,
        )
        if not report.admissible:
            logger.info(f"{self.family} mixture not admissible for alpha={alpha}: {report.to_dict()}")
        return report

    def gegenbauer_coefficients(self, basis, strict: Optional[bool] = None) -> np.ndarray:
        """Population coefficients ζ_k = ∫ φ(x) G_k(x) dx, k = 0..K."""
        return np.asarray(self.integrate(lambda x: basis.evaluate_all(x).T, strict=strict))

    def _ensure_samplers(self) -> List[_PieceSampler]:
        if self._samplers is None:
            self._samplers = [_PieceSampler(p) for p in self.pieces()]
        return self._samplers

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        samplers = self._ensure_samplers()
        masses = np.array([s.mass for s in samplers])
        edges = np.cumsum(masses / masses.sum())
        choice = np.minimum(np.searchsorted(edges, rng.random(size), side='right'), len(samplers) - 1)
        u = rng.random(size)
        draws = np.empty(size)
        for index, sampler in enumerate(samplers):
            mask = choice == index
            if np.any(mask):
                draws[mask] = sampler.invert(u[mask])
        bad = np.abs(draws) >= 1.0
        if np.any(bad):
            draws[bad] = self.sample(rng, int(bad.sum()))
        return draws


def _check_positive(name: str, value: float):
    if not (np.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be positive, got {value}", **{name: value})


def _check_open_unit(name: str, value: float):
    if not 0 < value < 1:
        raise InvalidParameterError(f"{name} must lie in (0, 1), got {value}", **{name: value})


def _check_memory(d: float):
    if not 0 < d < 0.5:
        raise InvalidParameterError(f"Memory parameter d must lie in (0, 1/2), got {d}", d=d)


class BetaTwoComponentMixture(MixtureDensity):
    """w·Beta(p1, q1) on [0, 1] plus (1 - w)·reflected Beta(p2, q2) on [-a*, 0]."""

    family = 'beta_two_component'

    def __init__(self, w, a_star, p1, q1, p2, q2):
        super().__init__()
        self.w, self.a_star = float(w), float(a_star)
        self.p1, self.q1, self.p2, self.q2 = float(p1), float(q1), float(p2), float(q2)
        _check_open_unit('w', self.w)
        _check_open_unit('a_star', self.a_star)
        for name in ('p1', 'q1', 'p2', 'q2'):
            _check_positive(name, getattr(self, name))

    def params(self):
        return {'w': self.w, 'a_star': self.a_star, 'p1': self.p1, 'q1': self.q1, 'p2': self.p2, 'q2': self.q2}

    def _build_pieces(self):
        a, p2, q2 = self.a_star, self.p2, self.q2
        negative_norm = a ** (p2 + q2 - 1.0) * beta_fn(p2, q2)
        return [
            # |x|^{p2-1} (a* + x)^{q2-1}
            DensityPiece(-a, 0.0, q2 - 1.0, p2 - 1.0, _Constant((1.0 - self.w) / negative_norm)),
            DensityPiece(0.0, 1.0, self.p1 - 1.0, self.q1 - 1.0, _Constant(self.w / beta_fn(self.p1, self.q1))),
        ]


class BetaUniformMixture(MixtureDensity):
    """w·Beta(p3, q3) on [0, 1] plus (1 - w)·Uniform[-a*, 0]."""

    family = 'beta_uniform'

    def __init__(self, w, a_star, p3, q3):
        super().__init__()
        self.w, self.a_star, self.p3, self.q3 = float(w), float(a_star), float(p3), float(q3)
        _check_open_unit('w', self.w)
        _check_open_unit('a_star', self.a_star)
        _check_positive('p3', self.p3)
        _check_positive('q3', self.q3)

    def params(self):
        return {'w': self.w, 'a_star': self.a_star, 'p3': self.p3, 'q3': self.q3}

    def _build_pieces(self):
        return [
            DensityPiece(-self.a_star, 0.0, 0.0, 0.0, _Constant((1.0 - self.w) / self.a_star)),
            DensityPiece(0.0, 1.0, self.p3 - 1.0, self.q3 - 1.0, _Constant(self.w / beta_fn(self.p3, self.q3))),
        ]


def farima_constant(d: float) -> float:
    """C1(d) = Γ(3 - d) / (2 Γ(d) Γ(2 - 2d))."""
    return gamma(3.0 - d) / (2.0 * gamma(d) * gamma(2.0 - 2.0 * d))


def farima_variance(d: float) -> float:
    """Variance Γ(1 - 2d)/Γ(1 - d)^2 of FARIMA(0, d, 0) with unit innovations."""
    return gamma(1.0 - 2.0 * d) / gamma(1.0 - d) ** 2


class FarimaMixture(MixtureDensity):
    """φ(x; d) = C1(d) x^{d-1} (1 - x)^{1-2d} (1 + x) on (0, 1]."""

    family = 'farima'

    def __init__(self, d):
        super().__init__()
        self.d = float(d)
        _check_memory(self.d)
        self.c1 = farima_constant(self.d)

    def params(self):
        return {'d': self.d}

    @property
    def natural_sigma_eps2(self) -> float:
        d = self.d
        return 2.0 * gamma(2.0 - 2.0 * d) / (gamma(3.0 - d) * gamma(1.0 - d))

    def _smooth(self, x):
        return self.c1 * (1.0 + x)

    def _build_pieces(self):
        d = self.d
        return [DensityPiece(0.0, 1.0, d - 1.0, 1.0 - 2.0 * d, self._smooth)]


class CompensatorMixture(MixtureDensity):
    """φ_g(x) = C2 |x|^κ on [-a*, 0] with C2 = (κ + 1) a*^{-κ-1}."""

    family = 'compensator'

    def __init__(self, kappa, a_star):
        super().__init__()
        self.kappa, self.a_star = float(kappa), float(a_star)
        _check_positive('kappa', self.kappa)
        _check_open_unit('a_star', self.a_star)
        self.c2 = (self.kappa + 1.0) * self.a_star ** (-self.kappa - 1.0)

    def params(self):
        return {'kappa': self.kappa, 'a_star': self.a_star}

    def _build_pieces(self):
        return [DensityPiece(-self.a_star, 0.0, 0.0, self.kappa, _Constant(self.c2))]


class ProductMixture(MixtureDensity):
    """
    Mixture density whose spectral density is f(λ; d)·g(λ).

    φ(x) = C*^{-1} (φ(x; d) A(x) + φ_g(x) B(x)) where A and B are the inner
    integrals of the kernel 1/((1 - xy)(1 - y/x)) against φ_g and φ(·; d).
    Both are evaluated in closed form through Gauss hypergeometric functions
    after the partial fraction split

        x / ((1 - xy)(x - y)) = x/(1 - x^2) [1/(x - y) - x/(1 - xy)].
    """

    family = 'product'

    def __init__(self, phi_d: FarimaMixture, phi_g: CompensatorMixture):
        super().__init__()
        if not isinstance(phi_d, FarimaMixture):
            raise InvalidParameterError("First factor of a product mixture must be a FARIMA mixture")
        if not isinstance(phi_g, CompensatorMixture):
            raise InvalidParameterError("Second factor of a product mixture must be a compensator mixture")
        lo, hi = phi_g.support
        if lo < -phi_g.a_star or hi > 0.0 or not 0 < phi_g.a_star < 1:
            raise InvalidParameterError(
                f"Compensator support [{lo}, {hi}] must lie in [-a*, 0] with 0 < a* < 1"
            )
        self.phi_d = phi_d
        self.phi_g = phi_g
        self.d = phi_d.d
        self.kappa = phi_g.kappa
        self.a_star = phi_g.a_star
        d = self.d
        self._u_weights = (beta_fn(d, 2.0 - 2.0 * d), beta_fn(d + 1.0, 2.0 - 2.0 * d))
        self.c_star = self._normalizer()
        logger.info(f"Product mixture d={d}, kappa={self.kappa}, a*={self.a_star}: C*={self.c_star:.12g}")

    def params(self):
        return {'d': self.d, 'kappa': self.kappa, 'a_star': self.a_star}

    def _normalizer(self) -> float:
        """C* = ∫∫ φ(x; d) φ_g(y) / (1 - xy) dy dx by nested quadrature."""
        def outer(x):
            return self.phi_g.integrate(lambda y: 1.0 / (1.0 - np.outer(y, x)))
        return float(self.phi_d.integrate(outer))

    @property
    def natural_sigma_eps2(self) -> float:
        return self.phi_d.natural_sigma_eps2 * self.c_star / (2 * np.pi)

    def _compensator_f(self, z):
        k = self.kappa
        return hyp2f1(1.0, k + 1.0, k + 2.0, z)

    def _farima_u(self, z):
        d = self.d
        b0, b1 = self._u_weights
        return b0 * hyp2f1(1.0, d, 2.0 - d, z) + b1 * hyp2f1(1.0, d + 1.0, 3.0 - d, z)

    def inner_a(self, x):
        """A(x) = ∫ φ_g(y) / ((1 - xy)(1 - y/x)) dy for 0 < x < 1."""
        x = np.clip(np.asarray(x, dtype=float), 1e-300, 1.0 - 1e-7)
        a = self.a_star
        return (self._compensator_f(-a / x) - x * x * self._compensator_f(-a * x)) / (1.0 - x * x)

    def inner_b(self, x):
        """B(x) = ∫ φ(y; d) / ((1 - xy)(1 - y/x)) dy for -a* <= x < 0."""
        x = np.minimum(np.asarray(x, dtype=float), -1e-300)
        return self.phi_d.c1 * (self._farima_u(1.0 / x) - x * x * self._farima_u(x)) / (1.0 - x * x)

    def _smooth_positive(self, x):
        xs = np.clip(x, 1e-300, 1.0 - 1e-7)
        return self.phi_d.c1 * (1.0 + xs) * (self.inner_a(xs) / xs) / self.c_star

    def _smooth_negative(self, x):
        xs = np.minimum(x, -1e-300)
        return self.phi_g.c2 * self.inner_b(xs) / np.abs(xs) ** self.d / self.c_star

    def _build_pieces(self):
        d, k, a, delta = self.d, self.kappa, self.a_star, PRODUCT_SPLIT
        # The smooth parts carry |x|^κ terms at 0; a short end piece keeps
        # their quadrature error down to the scale of delta^(1 + d + κ)
        positive = self._smooth_positive
        negative = self._smooth_negative
        return [
            DensityPiece(-a, -delta, 0.0, 0.0, lambda x: np.abs(x) ** (k + d) * negative(x)),
            DensityPiece(-delta, 0.0, 0.0, k + d, negative),
            DensityPiece(0.0, delta, d, 0.0, lambda x: (1.0 - x) ** (1.0 - 2.0 * d) * positive(x)),
            DensityPiece(delta, 1.0, 0.0, 1.0 - 2.0 * d, lambda x: x ** d * positive(x)),
        ]


class TabulatedMixture(MixtureDensity):
    """Piecewise-linear density through (x_i, φ_i), renormalized to unit mass."""

    family = 'tabulated'

    def __init__(self, x: Sequence[float], values: Sequence[float]):
        super().__init__()
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != values.shape or len(x) < 2:
            raise InvalidParameterError("Tabulated density needs matching x and value columns of length >= 2")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(values))):
            raise InvalidParameterError("Tabulated density contains non-finite entries")
        if np.any(np.diff(x) <= 0) or x[0] < -1.0 or x[-1] > 1.0:
            raise InvalidParameterError("Tabulated grid must be strictly increasing inside [-1, 1]")
        if np.any(values < 0):
            logger.warning(f"Tabulated density has {int(np.sum(values < 0))} negative values, clipping at zero")
            values = np.maximum(values, 0.0)
        raw_mass = float(trapezoid(values, x))
        if raw_mass <= 0:
            raise InvalidParameterError("Tabulated density has no mass")
        if abs(raw_mass - 1.0) > 1e-3:
            logger.info(f"Tabulated density mass {raw_mass:.6g} renormalized to 1")
        self.x = x
        self.values = values / raw_mass

    @classmethod
    def from_csv(cls, path) -> 'TabulatedMixture':
        from ..utils.series_io import read_density
        x, values = read_density(path)
        return cls(x, values)

    def params(self):
        return {'x': self.x.tolist(), 'values': self.values.tolist()}

    def _build_pieces(self):
        pieces = []
        for x0, x1, y0, y1 in zip(self.x[:-1], self.x[1:], self.values[:-1], self.values[1:]):
            if y0 == 0 and y1 == 0:
                continue
            # A cell vanishing at ±1 carries its zero in the Jacobi weight
            if x1 >= 1.0 and y1 == 0:
                pieces.append(DensityPiece(x0, x1, 0.0, 1.0, _Constant(y0 / (x1 - x0))))
            elif x0 <= -1.0 and y0 == 0:
                pieces.append(DensityPiece(x0, x1, 1.0, 0.0, _Constant(y1 / (x1 - x0))))
            else:
                pieces.append(DensityPiece(x0, x1, 0.0, 0.0, _LinearCell(x0, x1, y0, y1)))
        return pieces

    def mass(self) -> float:
        return float(trapezoid(self.values, self.x))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # Rejection from a uniform proposal on the grid span
        envelope = float(self.values.max())
        lo, hi = self.x[0], self.x[-1]
        draws = np.empty(0)
        while len(draws) < size:
            batch = max(2 * (size - len(draws)), 64)
            proposal = lo + (hi - lo) * rng.random(batch)
            accept = rng.random(batch) * envelope < np.interp(proposal, self.x, self.values)
            accepted = proposal[accept & (np.abs(proposal) < 1.0)]
            draws = np.concatenate([draws, accepted])
        return draws[:size]


class SpectralDensity:
    """Even spectral density λ ↦ f(λ) on [-π, π] with its provenance."""

    PROVENANCES = ('from-mixture', 'farima', 'product', 'analytic-custom')

    def __init__(self, evaluator: Callable[[np.ndarray], np.ndarray], provenance: str, d: Optional[float] = None):
        if provenance not in self.PROVENANCES:
            raise InvalidParameterError(f"Unknown spectral provenance {provenance}")
        self.evaluator = evaluator
        self.provenance = provenance
        self.d = d

    def __call__(self, lam):
        return self.evaluator(np.abs(np.asarray(lam, dtype=float)))

    @classmethod
    def from_mixture(cls, mixture: MixtureDensity, sigma_eps2: Optional[float] = None) -> 'SpectralDensity':
        d = getattr(mixture, 'd', None)
        return cls(lambda lam: mixture.spectral(lam, sigma_eps2), 'from-mixture', d)

    @classmethod
    def farima(cls, d: float) -> 'SpectralDensity':
        return cls(lambda lam: farima_spectral(lam, d), 'farima', d)

    @classmethod
    def product(cls, *factors: 'SpectralDensity') -> 'SpectralDensity':
        memory = [f.d for f in factors if f.d is not None and f.provenance == 'farima']
        d = memory[0] if memory else None

        def evaluate(lam):
            out = np.ones_like(lam)
            for factor in factors:
                out = out * factor(lam)
            return out

        return cls(evaluate, 'product', d)

    @classmethod
    def analytic(cls, func: Callable[[np.ndarray], np.ndarray], d: Optional[float] = None) -> 'SpectralDensity':
        return cls(func, 'analytic-custom', d)


# Module-level operations

def density(m: MixtureDensity, x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0):
        raise InvalidParameterError("density() is defined on [-1, 1]")
    result = m.density(x_arr)
    return float(result) if result.ndim == 0 else result


def check_integrability(m: MixtureDensity, alpha: float) -> IntegrabilityReport:
    return m.check_integrability(alpha)


def covariance(m: MixtureDensity, h: int, sigma_eps2: Optional[float] = None) -> float:
    return m.covariance(h, sigma_eps2)


def spectral(m: MixtureDensity, lam, sigma_eps2: Optional[float] = None):
    return m.spectral(lam, sigma_eps2)


def farima_spectral(lam, d: float):
    """f(λ; d) = (1/2π) (2 sin(|λ|/2))^{-2d}."""
    _check_memory(d)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam == 0):
        raise InvalidParameterError("FARIMA spectral density is singular at lambda = 0")
    result = (2.0 * np.sin(np.abs(lam) / 2.0)) ** (-2.0 * d) / (2 * np.pi)
    return float(result) if result.ndim == 0 else result


def product_mixture(phi_d: FarimaMixture, phi_g: CompensatorMixture) -> ProductMixture:
    return ProductMixture(phi_d, phi_g)


def product_psi(x: float, d: float, kappa: float, a_star: float):
    """
    The two components (ψ1, ψ2) of ψ(x) = φ(x)(1 - x)^{2d-1}, up to C1 C2 / C*,
    computed by direct adaptive quadrature of their defining integrals.
    """
    _check_memory(d)
    _check_positive('kappa', kappa)
    _check_open_unit('a_star', a_star)
    x = float(x)
    if x == 0.0:
        raise InvalidParameterError("x = 0 is a removable singularity of psi")
    if not -a_star <= x <= 1.0:
        raise InvalidParameterError(f"x must lie in [-a*, 1], got {x}")

    if x > 0:
        inner, _ = integrate_adaptive(
            lambda y: 1.0 / ((1.0 - x * y) * (1.0 - y / x)), -a_star, 0.0, 0.0, kappa,
        )
        return x ** (d - 1.0) * (1.0 + x) * inner, 0.0

    inner, _ = integrate_adaptive(
        lambda y: (1.0 + y) / ((1.0 - x * y) * (1.0 - y / x)), 0.0, 1.0, d - 1.0, 1.0 - 2.0 * d,
    )
    return 0.0, abs(x) ** kappa * (1.0 - x) ** (2.0 * d - 1.0) * inner


def psi_asymptotes(x: float, d: float, kappa: float, a_star: float):
    """
    Small-|x| expansions of ψ1 (x -> 0+) and ψ2 (x -> 0-).

    ψ1 carries the x^κ correction, which decays slowly for small κ:
    ∫_0^{a*} u^κ/(x + u) du = a*^κ/κ - x^κ π/sin(πκ) + x a*^{κ-1}/(1 - κ) + O(x^2).
    """
    x = float(x)
    if x > 0:
        a, k = a_star, kappa
        bracket = (a ** k / k - x ** k * np.pi / np.sin(np.pi * k)
                   + x * a ** (k - 1.0) / (1.0 - k) - x * a ** (k + 1.0) / (k + 1.0))
        return x ** d * (1.0 + x) * bracket, 0.0
    return 0.0, gamma(d) * gamma(1.0 - d) * abs(x) ** (kappa + d)


MIXTURE_FAMILIES = {
    'beta_two_component': BetaTwoComponentMixture,
    'beta_uniform': BetaUniformMixture,
    'farima': FarimaMixture,
    'compensator': CompensatorMixture,
}


def build_mixture(descriptor: Dict[str, Any]) -> MixtureDensity:
    """
    Construct a mixture from its descriptor, e.g. ``{"family": "farima", "d": 0.25}``.
    """
    data = dict(descriptor)
    family = data.pop('family', None)
    try:
        if family in MIXTURE_FAMILIES:
            return MIXTURE_FAMILIES[family](**data)
        if family == 'product':
            return ProductMixture(
                FarimaMixture(data['d']), CompensatorMixture(data['kappa'], data['a_star'])
            )
        if family == 'tabulated':
            if 'path' in data:
                return TabulatedMixture.from_csv(data['path'])
            return TabulatedMixture(data['x'], data['values'])
        if family == 'case':
            from ..presets import case_mixture_descriptor
            return build_mixture(case_mixture_descriptor(int(data['case'])))
    except (KeyError, TypeError) as e:
        raise InvalidParameterError(f"Incomplete {family} descriptor: {e}", family=family)
    raise InvalidParameterError(f"Unknown mixture family {family!r}", family=family)
