"""
Derivative-free searches used by the bound and certificate computations.
Golden-section on a grid-bracketed interval for 1-D problems, seeded
multi-start Powell refinement for the low-dimensional field searches.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from src.config.logging_config import get_logger
from src.config.settings import BRACKET_GRID_POINTS, GOLDEN_TOLERANCE
from src.core.errors import SearchError

logger = get_logger(__name__)

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


@dataclass(frozen=True)
class SearchResult:
    x: np.ndarray
    value: float
    evaluations: int


def golden_section(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = GOLDEN_TOLERANCE
) -> float:
    """
    Golden-section search for the minimum of a unimodal f on [a, b].

    Example:
        >>> round(golden_section(lambda x: (x - 2) ** 2, 1, 5), 6)
        2.0
    """
    c = b - (b - a) / GOLDEN_RATIO
    d = a + (b - a) / GOLDEN_RATIO
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) / GOLDEN_RATIO
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) / GOLDEN_RATIO
            fd = f(d)
    return (a + b) / 2


def bracketed_minimum(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    grid_points: int = BRACKET_GRID_POINTS,
    tol: float = GOLDEN_TOLERANCE
) -> Tuple[float, float]:
    """
    Minimise f over [lo, hi]: grid scan, then golden-section inside the
    cell pair around the best grid point. Endpoints are always candidates.

    Returns:
        Tuple[float, float]: (argmin, minimum)
    """
    if hi < lo:
        raise SearchError(f"Empty interval [{lo}, {hi}]")
    if hi == lo:
        return lo, f(lo)

    grid = np.linspace(lo, hi, grid_points)
    values = np.array([f(x) for x in grid])
    best = int(np.argmin(values))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, grid_points - 1)]

    x_refined = golden_section(f, left, right, tol)
    candidates = [(values[best], grid[best]), (f(x_refined), x_refined)]
    value, x = min(candidates, key=lambda item: item[0])
    return float(x), float(value)


def bisect_boundary(
    predicate: Callable[[float], bool],
    lo: float,
    hi: float,
    tol: float
) -> float:
    """
    Locate the switch point of a predicate that holds at lo and fails at hi.
    Returns the last point where the predicate held, within tol of the switch.

    Raises:
        SearchError: If the predicate does not hold at lo or does not fail at hi
    """
    if not predicate(lo):
        raise SearchError(f"Predicate must hold at the lower end {lo}")
    if predicate(hi):
        raise SearchError(f"Predicate must fail at the upper end {hi}")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo


def grid_points(bound: float, per_axis: int, dims: int) -> np.ndarray:
    """Cartesian grid over [-bound, bound]^dims, shape (per_axis**dims, dims)."""
    axis = np.linspace(-bound, bound, per_axis)
    mesh = np.meshgrid(*([axis] * dims), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def multi_start_minimize(
    f: Callable[[np.ndarray], float],
    starts: Sequence[np.ndarray],
    bounds: Optional[Sequence[Tuple[float, float]]] = None,
    workers: int = 1,
    xtol: float = 1e-10,
    ftol: float = 1e-14
) -> SearchResult:
    """
    Refine every start with Powell's method and keep the best.

    Starts may run on a thread pool; the reduction is over the start order
    (lowest value, then lowest index) so the result does not depend on
    scheduling.
    """
    def refine(x0: np.ndarray):
        return minimize(
            f,
            np.asarray(x0, dtype=float),
            method="Powell",
            bounds=bounds,
            options={"xtol": xtol, "ftol": ftol, "maxfev": 20000},
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(refine, starts))
    else:
        results = [refine(x0) for x0 in starts]

    evaluations = sum(int(r.nfev) for r in results)
    best_index = min(range(len(results)), key=lambda i: (float(results[i].fun), i))
    best = results[best_index]
    logger.debug(
        "Multi-start search finished",
        starts=len(starts),
        best_index=best_index,
        best_value=float(best.fun),
        evaluations=evaluations
    )
    return SearchResult(x=np.atleast_1d(best.x), value=float(best.fun), evaluations=evaluations)
