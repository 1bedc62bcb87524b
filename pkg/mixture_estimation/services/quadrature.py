"""
Singular quadrature shared by every forward map.

Integrals of the form

    ∫_lo^hi (x - lo)^left_exp (hi - x)^right_exp g(x) dx

are computed with Gauss-Jacobi rules whose weight absorbs the endpoint
singularities, so g only has to be smooth. The node count doubles until two
successive estimates agree, mirroring the classic adaptive Gauss-Jacobi loop.
"""
import functools
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from django.conf import settings
from scipy import integrate as sp_integrate
from scipy.special import roots_jacobi

from ..exceptions import InvalidParameterError, QuadratureError

logger = logging.getLogger(__name__)

# Above this error the cap is a warning, below it only a debug message
LOOSE_TOLERANCE = 1e-6


@dataclass
class QuadratureResult:
    """Value of a (possibly vector valued) integral with its convergence data."""
    value: np.ndarray
    error: float
    nodes: int
    converged: bool


def _setting(name: str, default):
    return getattr(settings, name, default)


def resolve_strict(strict: Optional[bool]) -> bool:
    """``strict`` as given, or the QUADRATURE_STRICT setting when None."""
    return bool(_setting('QUADRATURE_STRICT', False)) if strict is None else bool(strict)


def combine_results(results) -> QuadratureResult:
    """Sum of several integrals; converged only if every part converged."""
    results = list(results)
    if not results:
        raise InvalidParameterError("Nothing to combine")
    value = results[0].value
    for result in results[1:]:
        value = value + result.value
    return QuadratureResult(
        value=value,
        error=float(sum(r.error for r in results)),
        nodes=max(r.nodes for r in results),
        converged=all(r.converged for r in results),
    )


@functools.lru_cache(maxsize=512)
def _reference_rule(m: int, right_exp: float, left_exp: float):
    """Gauss-Jacobi nodes/weights on [-1, 1] for (1-t)^right_exp (1+t)^left_exp."""
    nodes, weights = roots_jacobi(m, right_exp, left_exp)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def jacobi_rule(lo: float, hi: float, left_exp: float, right_exp: float, m: int):
    """
    Gauss-Jacobi rule mapped to [lo, hi].

    Args:
        lo, hi: Integration interval
        left_exp: Exponent of (x - lo) absorbed in the weight (> -1)
        right_exp: Exponent of (hi - x) absorbed in the weight (> -1)
        m: Number of nodes

    Returns:
        Tuple (nodes, weights) such that sum(w * g(x)) approximates the integral
    """
    if left_exp <= -1 or right_exp <= -1:
        raise InvalidParameterError(
            f"Jacobi exponents must exceed -1, got ({left_exp}, {right_exp})"
        )
    if hi <= lo:
        raise InvalidParameterError(f"Empty interval [{lo}, {hi}]")
    t, w = _reference_rule(int(m), float(right_exp), float(left_exp))
    half = 0.5 * (hi - lo)
    x = lo + half * (t + 1.0)
    return x, w * half ** (left_exp + right_exp + 1.0)


def integrate(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    left_exp: float = 0.0,
    right_exp: float = 0.0,
    tol: Optional[float] = None,
    min_nodes: Optional[int] = None,
    max_nodes: Optional[int] = None,
    strict: Optional[bool] = False,
) -> QuadratureResult:
    """
    Adaptive Gauss-Jacobi integration with node doubling.

    ``func`` receives the node vector and returns values whose first axis runs
    over the nodes; trailing axes are integrated independently, which lets one
    call produce many lags or frequencies at once.

    Args:
        func: Smooth part of the integrand
        lo, hi: Integration interval
        left_exp, right_exp: Endpoint exponents absorbed in the weight
        tol: Agreement required between successive doublings (relative to max(1, |value|))
        min_nodes, max_nodes: Node count range
        strict: Raise QuadratureError instead of warning when the cap is reached;
            None defers to the QUADRATURE_STRICT setting

    Returns:
        QuadratureResult; ``converged`` and ``error`` report a capped run
    """
    strict = resolve_strict(strict)
    tol = _setting('QUADRATURE_TOL', 1e-10) if tol is None else tol
    m = _setting('QUADRATURE_MIN_NODES', 32) if min_nodes is None else min_nodes
    cap = _setting('QUADRATURE_MAX_NODES', 4096) if max_nodes is None else max_nodes

    previous = None
    error = np.inf
    while True:
        x, w = jacobi_rule(lo, hi, left_exp, right_exp, m)
        values = np.asarray(func(x))
        estimate = np.tensordot(w, values, axes=(0, 0))
        if previous is not None:
            error = float(np.max(np.abs(estimate - previous)))
            scale = max(1.0, float(np.max(np.abs(estimate))))
            if not np.isfinite(error):
                break
            if error <= tol * scale:
                return QuadratureResult(estimate, error, m, True)
        if m >= cap:
            break
        previous = estimate
        m *= 2

    message = (
        f"Gauss-Jacobi quadrature on [{lo}, {hi}] with exponents "
        f"({left_exp:.4g}, {right_exp:.4g}) stopped at {m} nodes, achieved error {error:.3g}"
    )
    if strict or not np.isfinite(error):
        logger.error(message)
        raise QuadratureError(message, achieved_error=error)
    if error > LOOSE_TOLERANCE * max(1.0, float(np.max(np.abs(estimate)))):
        logger.warning(message)
    else:
        logger.debug(message)
    return QuadratureResult(estimate, error, m, False)


def integrate_adaptive(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    left_exp: float = 0.0,
    right_exp: float = 0.0,
    tol: float = 1e-11,
    limit: int = 400,
    fail_tol: float = 1e-6,
) -> tuple:
    """
    Scalar adaptive integration (QUADPACK) with algebraic endpoint weight.

    Used where the smooth part itself is only piecewise regular, e.g. the
    near-singular kernels of the product mixture at small |x|.

    Returns:
        Tuple (value, abserr)
    """
    if left_exp or right_exp:
        value, abserr = sp_integrate.quad(
            func, lo, hi, weight='alg', wvar=(left_exp, right_exp),
            epsabs=tol, epsrel=tol, limit=limit,
        )
    else:
        value, abserr = sp_integrate.quad(func, lo, hi, epsabs=tol, epsrel=tol, limit=limit)

    if not np.isfinite(value) or abserr > fail_tol * max(1.0, abs(value)):
        message = f"Adaptive quadrature on [{lo}, {hi}] did not converge, achieved error {abserr:.3g}"
        logger.error(message)
        raise QuadratureError(message, achieved_error=float(abserr))
    return value, abserr


def chebyshev_grid(size: int):
    """
    Chebyshev points of the first kind on (-1, 1) with Fejér weights.

    The nodes exclude both endpoints, so densities with integrable endpoint
    singularities can be tabulated on them.

    Returns:
        Tuple (nodes ascending, weights)
    """
    if size < 2:
        raise InvalidParameterError(f"Grid size must be at least 2, got {size}")
    k = np.arange(1, size + 1)
    theta = (2 * k - 1) * np.pi / (2 * size)
    j = np.arange(1, size // 2 + 1)
    series = np.cos(2 * np.outer(theta, j)) / (4 * j ** 2 - 1)
    weights = (2.0 / size) * (1.0 - 2.0 * series.sum(axis=1))
    nodes = np.cos(theta)
    order = np.argsort(nodes)
    return nodes[order], weights[order]
