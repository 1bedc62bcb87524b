"""
Monte-Carlo experiment runner.

Replications are seeded by (seed, replication index) and merged in index
order, so serial and threaded runs produce the same report.
"""
import logging
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from django.conf import settings
from scipy import stats

from ..exceptions import (
    DisaggregationError,
    DegenerateVarianceError,
    ExperimentFailureError,
    InvalidParameterError,
)
from ..utils.reporting import dump_report, write_table
from .estimator import EstimatorConfig, estimate, truncation_Kn
from .mixture import MixtureDensity
from .quadrature import chebyshev_grid
from .simulate import GaussianSynthesizer, PanelConfig, aggregate

logger = logging.getLogger(__name__)

QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)
HISTOGRAM_BINS = 20


@dataclass
class ExperimentSpec:
    mixture: MixtureDensity
    n: int
    M: int
    estimator: EstimatorConfig
    eval_points: List[float]
    N: Union[int, str] = 'limit'
    grid_size: int = 512
    seed: int = 0
    n_grid: List[int] = field(default_factory=list)
    sigma_eps2: Optional[float] = None
    case_id: Optional[int] = None

    def __post_init__(self):
        if self.M < 2:
            raise InvalidParameterError(f"At least two replications are required, got M={self.M}")
        if self.N != 'limit' and (not isinstance(self.N, int) or self.N < 1):
            raise InvalidParameterError(f"N must be a positive integer or 'limit', got {self.N!r}")
        if any(not -1 < x < 1 for x in self.eval_points):
            raise InvalidParameterError("Evaluation points must lie in (-1, 1)")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentSpec':
        """Validate a spec-file dictionary and build the spec."""
        from ..serializers import ExperimentSpecSerializer

        serializer = ExperimentSpecSerializer(data=data)
        if not serializer.is_valid():
            raise InvalidParameterError(f"Invalid experiment spec: {serializer.errors}", errors=serializer.errors)
        return serializer.save()

    @property
    def route(self) -> str:
        return 'synthesis' if self.N == 'limit' else 'panel'

    @property
    def resolved_sigma_eps2(self) -> float:
        return self.mixture.natural_sigma_eps2 if self.sigma_eps2 is None else self.sigma_eps2

    def with_n(self, n: int) -> 'ExperimentSpec':
        return replace(self, n=int(n))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'case_id': self.case_id,
            'mixture': self.mixture.to_dict(),
            'n': self.n,
            'N': self.N,
            'M': self.M,
            'route': self.route,
            'estimator': self.estimator.to_dict(),
            'eval_points': list(self.eval_points),
            'grid_size': self.grid_size,
            'seed': self.seed,
            'n_grid': list(self.n_grid),
            'sigma_eps2': self.resolved_sigma_eps2,
        }


def replication_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


class _Replicator:
    """Simulates and estimates one replication at a time for a fixed n."""

    def __init__(self, spec: ExperimentSpec, n: int):
        self.spec = spec
        self.n = n
        self.points = np.asarray(spec.eval_points, dtype=float)
        self.grid_x, self.grid_w = chebyshev_grid(spec.grid_size)
        self.synthesizer = None
        if spec.route == 'synthesis':
            self.synthesizer = GaussianSynthesizer(spec.mixture, n, spec.resolved_sigma_eps2)

    def series(self, index: int):
        seed = replication_seed(self.spec.seed, index)
        if self.synthesizer is not None:
            return self.synthesizer.sample(seed)
        config = PanelConfig(N=self.spec.N, n=self.n, sigma_eps=float(np.sqrt(self.spec.resolved_sigma_eps2)),
                             seed=seed)
        return aggregate(self.spec.mixture, config)

    def __call__(self, index: int) -> Dict[str, Any]:
        started = time.perf_counter()
        try:
            fitted = estimate(self.series(index), self.spec.estimator)
        except InvalidParameterError:
            raise
        except DisaggregationError as e:
            logger.warning(f"Replication {index} failed: {e}")
            return {'ok': False, 'code': e.code, 'elapsed': time.perf_counter() - started}
        return {
            'ok': True,
            'points': fitted.evaluate(self.points),
            'grid': fitted.evaluate(self.grid_x),
            'Kn': fitted.Kn,
            'elapsed': time.perf_counter() - started,
        }


def _replicate(replicator: _Replicator, M: int, workers: Optional[int]) -> List[Dict[str, Any]]:
    workers = workers or getattr(settings, 'EXPERIMENT_WORKERS', 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(replicator, range(M)))
    return [replicator(index) for index in range(M)]


def _check_failures(results: List[Dict[str, Any]], M: int) -> Counter:
    failures = Counter(r['code'] for r in results if not r['ok'])
    failed = sum(failures.values())
    threshold = getattr(settings, 'EXPERIMENT_FAILURE_THRESHOLD', 0.2)
    if failed > threshold * M or failed == M:
        logger.error(f"{failed} of {M} replications failed: {dict(failures)}")
        raise ExperimentFailureError(
            f"{failed} of {M} replications failed (threshold {threshold:.0%})", failed=failed, total=M
        )
    return failures


def normality_test(samples) -> tuple:
    """Shapiro-Wilk (W, p-value)."""
    samples = np.asarray(samples, dtype=float)
    if not 3 <= len(samples) <= 5000:
        raise InvalidParameterError(f"Shapiro-Wilk needs 3..5000 observations, got {len(samples)}")
    if np.ptp(samples) == 0:
        raise InvalidParameterError("Shapiro-Wilk is undefined for a constant sample")
    result = stats.shapiro(samples)
    return float(result.statistic), float(result.pvalue)


def qq_data(samples) -> np.ndarray:
    """Rows (standard-normal quantile, sample quantile), positions (i - 3/8)/(M + 1/4)."""
    samples = np.sort(np.asarray(samples, dtype=float))
    M = len(samples)
    if M < 3:
        raise InvalidParameterError(f"QQ data needs at least 3 observations, got {M}")
    positions = (np.arange(1, M + 1) - 0.375) / (M + 0.25)
    return np.column_stack([stats.norm.ppf(positions), samples])


@dataclass
class ReplicationReport:
    spec: Dict[str, Any]
    grid_x: np.ndarray
    grid_weights: np.ndarray
    grid_values: np.ndarray
    true_grid: np.ndarray
    quantiles: np.ndarray
    eval_points: np.ndarray
    point_samples: np.ndarray
    true_points: np.ndarray
    Kn: int
    alpha: float
    succeeded: int
    failed: int
    failure_codes: Dict[str, int]
    timing: Dict[str, float]
    mise: float = 0.0

    def point_summary(self, index: int) -> Dict[str, Any]:
        samples = self.point_samples[:, index]
        summary = {
            'x': float(self.eval_points[index]),
            'true': float(self.true_points[index]),
            'mean': float(np.mean(samples)),
            'variance': float(np.var(samples, ddof=1)) if len(samples) > 1 else None,
            'samples': samples,
            'normality': None,
            'qq': None,
        }
        if len(samples) >= 3 and np.ptp(samples) > 0:
            W, p = normality_test(samples)
            summary['normality'] = {'W': W, 'p_value': p}
            summary['qq'] = qq_data(samples)
            counts, edges = np.histogram(samples, bins=HISTOGRAM_BINS)
            summary['histogram'] = {'edges': edges, 'counts': counts}
        return summary

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        grid = {'x': self.grid_x, 'true': self.true_grid}
        for level, row in zip(QUANTILE_LEVELS, self.quantiles):
            grid[f'q{int(round(level * 100)):02d}'] = row
        payload = {
            'schema_version': getattr(settings, 'REPORT_SCHEMA_VERSION', '1.0'),
            'spec': self.spec,
            'Kn': self.Kn,
            'alpha': self.alpha,
            'replications': {
                'total': self.succeeded + self.failed,
                'succeeded': self.succeeded,
                'failed': self.failed,
                'failure_codes': dict(sorted(self.failure_codes.items())),
            },
            'mise': self.mise,
            'grid': grid,
            'points': [self.point_summary(i) for i in range(len(self.eval_points))],
        }
        if include_timing:
            payload['timing'] = self.timing
        return payload


def mise(report, true_density: MixtureDensity) -> float:
    """Mean over replications of ∫(φ̂ - φ)² on the report's quadrature grid."""
    truth = true_density.density(report.grid_x)
    errors = (np.asarray(report.grid_values) - truth[None, :]) ** 2 @ report.grid_weights
    return float(np.mean(errors))


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> ReplicationReport:
    logger.info(f"Experiment start: route={spec.route}, n={spec.n}, M={spec.M}, seed={spec.seed}")
    started = time.perf_counter()
    replicator = _Replicator(spec, spec.n)
    results = _replicate(replicator, spec.M, workers)
    failures = _check_failures(results, spec.M)

    good = [r for r in results if r['ok']]
    grid_values = np.array([r['grid'] for r in good])
    point_samples = np.array([r['points'] for r in good]).reshape(len(good), len(replicator.points))
    elapsed = time.perf_counter() - started

    report = ReplicationReport(
        spec=spec.to_dict(),
        grid_x=replicator.grid_x,
        grid_weights=replicator.grid_w,
        grid_values=grid_values,
        true_grid=spec.mixture.density(replicator.grid_x),
        quantiles=np.quantile(grid_values, QUANTILE_LEVELS, axis=0),
        eval_points=replicator.points,
        point_samples=point_samples,
        true_points=spec.mixture.density(replicator.points),
        Kn=good[0]['Kn'],
        alpha=spec.estimator.resolved_alpha(),
        succeeded=len(good),
        failed=spec.M - len(good),
        failure_codes=dict(failures),
        timing={
            'total_seconds': elapsed,
            'mean_replication_seconds': float(np.mean([r['elapsed'] for r in results])),
        },
    )
    report.mise = mise(report, spec.mixture)
    logger.info(
        f"Experiment finished in {elapsed:.1f}s: {report.succeeded}/{spec.M} succeeded, MISE={report.mise:.6g}"
    )
    return report


@dataclass
class VarianceSlope:
    gamma_hat: float
    intercept: float
    n_values: List[int]
    variances: List[float]
    r_squared: float
    point: Optional[float] = None
    Kn: Optional[int] = None
    Kn_source: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'gamma_hat': self.gamma_hat,
            'intercept': self.intercept,
            'n_values': self.n_values,
            'variances': self.variances,
            'r_squared': self.r_squared,
            'point': self.point,
            'Kn': self.Kn,
            'Kn_source': self.Kn_source,
        }


def fit_variance_decay(n_values: Sequence[int], variances: Sequence[float]) -> VarianceSlope:
    """OLS of log variance on log n; γ̂ is minus the slope."""
    n_values = [int(n) for n in n_values]
    variances = [float(v) for v in variances]
    if len(set(n_values)) != len(n_values) or len(n_values) < 4:
        raise InvalidParameterError(f"Variance regression needs at least 4 distinct n values, got {n_values}")
    if len(variances) != len(n_values):
        raise InvalidParameterError("One variance per n value is required")
    if any(not v > 0 for v in variances):
        raise DegenerateVarianceError(f"Nonpositive variance in {variances}", variances=variances)
    fit = stats.linregress(np.log(n_values), np.log(variances))
    return VarianceSlope(
        gamma_hat=float(-fit.slope),
        intercept=float(fit.intercept),
        n_values=n_values,
        variances=variances,
        r_squared=float(fit.rvalue ** 2),
    )


def variance_slope(spec: ExperimentSpec, n_values: Sequence[int], point: Optional[float] = None,
                   workers: Optional[int] = None) -> VarianceSlope:
    """
    Monte-Carlo variance of φ̂_n(x) at one point for each n, fitted on a log-log scale.

    K_n is held fixed over ``n_values``: the spec's ``kn`` when given, otherwise
    floor(γ log n) at the spec's own n. A step in K_n inside the grid changes
    the variance by an order of magnitude and hides the decay in n.
    """
    n_values = [int(n) for n in n_values]
    if len(set(n_values)) != len(n_values) or len(n_values) < 4:
        raise InvalidParameterError(f"Variance regression needs at least 4 distinct n values, got {n_values}")
    point = spec.eval_points[0] if point is None else float(point)
    if spec.estimator.kn_override is not None:
        Kn, source = spec.estimator.kn_override, 'spec'
    else:
        Kn, source = truncation_Kn(spec.n, spec.estimator.gamma), f'gamma_log_n_at_{spec.n}'
    estimator = replace(spec.estimator, kn_override=Kn)
    variances = []
    for n in n_values:
        sized = replace(spec.with_n(n), eval_points=[point], estimator=estimator)
        results = _replicate(_Replicator(sized, n), sized.M, workers)
        _check_failures(results, sized.M)
        samples = np.array([r['points'][0] for r in results if r['ok']])
        variances.append(float(np.var(samples, ddof=1)))
        logger.info(f"Variance at x={point}, n={n} (K_n={Kn}): {variances[-1]:.6g}")
    result = fit_variance_decay(n_values, variances)
    result.point = point
    result.Kn = Kn
    result.Kn_source = source
    logger.info(f"Variance decay exponent gamma_hat={result.gamma_hat:.4f} (R^2={result.r_squared:.4f})")
    return result


def write_report(report: ReplicationReport, out_dir, slope: Optional[VarianceSlope] = None) -> Dict[str, Path]:
    """report.json plus the plot tables fig1_boxplot.csv, fig2_qq.csv and fig3_loglog.csv."""
    out_dir = Path(out_dir)
    payload = report.to_dict()
    if slope is not None:
        payload['variance_slope'] = slope.to_dict()
    paths = {'report': dump_report(out_dir / 'report.json', payload)}

    paths['fig1'] = write_table(
        out_dir / 'fig1_boxplot.csv',
        ['x', 'true', 'q05', 'q25', 'q50', 'q75', 'q95'],
        np.column_stack([report.grid_x, report.true_grid, report.quantiles.T]),
    )

    qq_rows = []
    for index, x in enumerate(report.eval_points):
        samples = report.point_samples[:, index]
        if len(samples) >= 3:
            pairs = qq_data(samples)
            qq_rows.append(np.column_stack([np.full(len(pairs), index), np.full(len(pairs), x), pairs]))
    if qq_rows:
        paths['fig2'] = write_table(out_dir / 'fig2_qq.csv', ['point', 'x', 'theoretical', 'sample'],
                                    np.vstack(qq_rows))

    if slope is not None:
        log_n = np.log(slope.n_values)
        fitted = slope.intercept - slope.gamma_hat * log_n
        paths['fig3'] = write_table(
            out_dir / 'fig3_loglog.csv',
            ['n', 'variance', 'log_n', 'log_variance', 'fitted_log_variance'],
            np.column_stack([slope.n_values, slope.variances, log_n, np.log(slope.variances), fitted]),
        )
    return paths
