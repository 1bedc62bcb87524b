"""
Realizations of the aggregated process.

Two routes: literal aggregation of N random-coefficient AR(1) paths, or exact
Gaussian synthesis of the limit process from its autocovariance.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from typing import Optional, Dict, Any, Union

import numpy as np
from django.conf import settings
from scipy import linalg
from scipy.signal import lfilter

from ..exceptions import InvalidParameterError, SynthesisError
from .mixture import MixtureDensity

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence]

# Circulant eigenvalues in [-EIGEN_TOLERANCE, 0) are clipped to zero, anything lower rejects the embedding
EIGEN_TOLERANCE = 1e-8


@dataclass(frozen=True)
class PanelConfig:
    N: int
    n: int
    sigma_eps: float = 1.0
    burn_in: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise InvalidParameterError(f"Panel size N must be at least 1, got {self.N}")
        if self.n < 8:
            raise InvalidParameterError(f"Series length n must be at least 8, got {self.n}")
        if not self.sigma_eps > 0:
            raise InvalidParameterError(f"sigma_eps must be positive, got {self.sigma_eps}")
        if self.burn_in < 0:
            raise InvalidParameterError(f"burn_in must be non-negative, got {self.burn_in}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameterError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), 'route': 'panel', 'innovation_law': 'gaussian'}


class AggregatedSeries:
    """One realization X_1..X_n with its generation metadata."""

    def __init__(self, values, meta: Dict[str, Any], source_mixture: Optional[MixtureDensity] = None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise InvalidParameterError("Series values must be a finite vector")
        self.values = values
        self.meta = dict(meta)
        self.source_mixture = source_mixture

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def descriptor(self) -> Dict[str, Any]:
        meta = dict(self.meta)
        if self.source_mixture is not None:
            meta['mixture'] = self.source_mixture.to_dict()
        meta['n'] = self.n
        return meta


def member_generator(seed: int, index: int) -> np.random.Generator:
    """Independent stream of panel member ``index``, independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def sample_coefficient(m: MixtureDensity, rng: np.random.Generator) -> float:
    return float(m.sample(rng, 1)[0])


def _innovations(a: float, config: PanelConfig, rng: np.random.Generator):
    if not abs(a) < 1:
        raise InvalidParameterError(f"AR coefficient must satisfy |a| < 1, got {a}")
    y0 = rng.standard_normal() * config.sigma_eps / np.sqrt(1.0 - a * a)
    eps = rng.standard_normal(config.n + config.burn_in) * config.sigma_eps
    return y0, eps


def _recursion(a: np.ndarray, y0: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Y_t = a Y_{t-1} + ε_t for a block of members (rows)."""
    paths = np.empty_like(eps)
    previous = y0
    for t in range(eps.shape[1]):
        previous = a * previous + eps[:, t]
        paths[:, t] = previous
    return paths


def ar1_path(a: float, config: PanelConfig, rng: np.random.Generator) -> np.ndarray:
    """Stationary AR(1) path of length n, Y_0 drawn from the stationary law."""
    y0, eps = _innovations(a, config, rng)
    path = lfilter([1.0], [1.0, -a], eps, zi=[a * y0])[0]
    return path[config.burn_in:]


def _block_sum(m: MixtureDensity, config: PanelConfig, start: int, stop: int) -> np.ndarray:
    size = stop - start
    a = np.empty(size)
    y0 = np.empty(size)
    eps = np.empty((size, config.n + config.burn_in))
    for row, index in enumerate(range(start, stop)):
        rng = member_generator(config.seed, index)
        a[row] = sample_coefficient(m, rng)
        y0[row], eps[row] = _innovations(a[row], config, rng)
    paths = _recursion(a, y0, eps)[:, config.burn_in:]
    return paths.sum(axis=0)


def aggregate(m: MixtureDensity, config: PanelConfig, workers: int = 1) -> AggregatedSeries:
    """
    X_t = N^{-1/2} Σ_j Y_t^{(j)}.

    Members are generated in fixed-size blocks; only one block of paths is
    held in memory per worker and block sums are added in block order.
    """
    block = getattr(settings, 'PANEL_BLOCK_SIZE', 256)
    bounds = [(start, min(start + block, config.N)) for start in range(0, config.N, block)]
    logger.info(f"Aggregating N={config.N} AR(1) paths of length {config.n} in {len(bounds)} blocks")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            sums = list(executor.map(lambda b: _block_sum(m, config, *b), bounds))
    else:
        sums = [_block_sum(m, config, *b) for b in bounds]

    total = np.zeros(config.n)
    for partial in sums:
        total = total + partial
    return AggregatedSeries(total / np.sqrt(config.N), config.to_dict(), m)


class GaussianSynthesizer:
    """
    Exact sampler of the stationary Gaussian process with autocovariance σ(h).

    Circulant embedding is tried first with the minimal embedding, then with a
    doubled one; a Cholesky factor of the Toeplitz covariance is the fallback.
    """

    def __init__(self, m: MixtureDensity, n: int, sigma_eps2: Optional[float] = None):
        if n < 1:
            raise InvalidParameterError(f"Series length must be positive, got {n}")
        self.mixture = m
        self.n = int(n)
        self.sigma_eps2 = m.natural_sigma_eps2 if sigma_eps2 is None else float(sigma_eps2)
        self.route = None
        self._eigen = None
        self._cholesky = None
        self._prepare()

    def _prepare(self):
        n = self.n
        if n == 1:
            self.route = 'single'
            self._variance = self.mixture.covariance(0, self.sigma_eps2)
            return

        for size in (2 * (n - 1), 4 * (n - 1)):
            row = self.mixture.autocovariances(size // 2 + 1, self.sigma_eps2)
            circulant = np.concatenate([row, row[-2:0:-1]])
            eigen = np.fft.fft(circulant).real
            if eigen.min() >= -EIGEN_TOLERANCE:
                self._eigen = np.maximum(eigen, 0.0)
                self.route = 'circulant'
                logger.info(f"Circulant embedding of size {size} accepted for n={n}")
                return
            logger.warning(
                f"Circulant embedding of size {size} has eigenvalue {eigen.min():.3g}, trying a larger one"
            )

        try:
            row = self.mixture.autocovariances(n, self.sigma_eps2)
            self._cholesky = linalg.cholesky(linalg.toeplitz(row), lower=True)
            self.route = 'cholesky'
            logger.warning(f"Falling back to Cholesky synthesis for n={n}")
        except linalg.LinAlgError as e:
            logger.error(f"Both synthesis routes failed for n={n}: {e}")
            raise SynthesisError(
                f"Autocovariance of length {n} is neither circulant-embeddable nor positive definite",
                n=n,
            )

    def meta(self, seed: SeedLike) -> Dict[str, Any]:
        if isinstance(seed, np.random.SeedSequence):
            seed = seed.entropy
        return {
            'route': 'synthesis',
            'method': self.route,
            'sigma_eps2': self.sigma_eps2,
            'seed': [int(s) for s in seed] if isinstance(seed, (list, tuple)) else int(seed),
        }

    def sample_values(self, rng: np.random.Generator) -> np.ndarray:
        n = self.n
        if self.route == 'single':
            return np.array([np.sqrt(self._variance) * rng.standard_normal()])
        if self.route == 'cholesky':
            return self._cholesky @ rng.standard_normal(n)
        size = len(self._eigen)
        noise = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        field = np.fft.fft(np.sqrt(self._eigen / size) * noise)
        return field.real[:n]

    def sample(self, seed: SeedLike) -> AggregatedSeries:
        rng = np.random.default_rng(seed)
        return AggregatedSeries(self.sample_values(rng), self.meta(seed), self.mixture)


def gaussian_synthesis(m: MixtureDensity, n: int, sigma_eps2: Optional[float], seed: SeedLike) -> AggregatedSeries:
    return GaussianSynthesizer(m, n, sigma_eps2).sample(seed)
