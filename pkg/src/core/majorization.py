"""
Thermo-majorization (d-majorization) of classical distributions.

A distribution p can be sent to q by a stochastic map fixing the Gibbs
weights w iff the Lorenz curve of (p, w) lies on or above that of (q, w).
Maps act on probability column vectors: G is column-stochastic and G w = w.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from src.config.logging_config import get_logger
from src.config.settings import (
    BISECTION_TOLERANCE,
    FEASIBILITY_TOLERANCE,
    PSD_TOLERANCE,
)
from src.core.errors import SearchError, ValidationError
from src.core.quantum_core import DensityMatrix
from src.core.validators import validate_distribution
from src.utils.search import bisect_boundary

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class ClassicalDistribution:
    """Probability vector; tiny negative noise is clipped to zero."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        ok, error = validate_distribution(probs)
        if not ok:
            raise ValidationError(error)
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, n: int) -> "ClassicalDistribution":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_state(cls, rho: DensityMatrix) -> "ClassicalDistribution":
        """Diagonal of rho in the computational basis."""
        return cls(np.real(np.diag(rho.matrix)))


@dataclass(frozen=True, eq=False)
class LorenzCurve:
    """Piecewise-linear concave curve from (0, 0) to (1, 1)."""

    points: np.ndarray
    order: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def __call__(self, x):
        return np.interp(x, self.x, self.y)

    def slopes(self) -> np.ndarray:
        return np.diff(self.y) / np.diff(self.x)


def _check_pair(p: ClassicalDistribution, w: ClassicalDistribution) -> None:
    if p.size != w.size:
        raise ValidationError(f"Length mismatch: {p.size} vs {w.size}")
    if np.min(w.probs) <= 0:
        raise ValidationError("Gibbs weights must be strictly positive")


def thermo_lorenz_curve(p: ClassicalDistribution, w: ClassicalDistribution) -> LorenzCurve:
    """
    Lorenz curve of p relative to Gibbs weights w.

    Levels are taken in order of non-increasing p_i / w_i (ties by index);
    the k-th point is the partial sums of w and p over the first k levels.

    Raises:
        ValidationError: On a zero Gibbs weight or length mismatch
    """
    _check_pair(p, w)
    ratios = p.probs / w.probs
    order = np.argsort(-ratios, kind="stable")
    xs = np.concatenate([[0.0], np.cumsum(w.probs[order])])
    ys = np.concatenate([[0.0], np.cumsum(p.probs[order])])
    # Pin the end point; cumulative sums drift by a few ulps
    xs[-1] = 1.0
    ys[-1] = 1.0
    return LorenzCurve(points=np.column_stack([xs, ys]), order=order)


def thermo_majorizes(
    p: ClassicalDistribution,
    q: ClassicalDistribution,
    w: ClassicalDistribution,
    tol: float = FEASIBILITY_TOLERANCE
) -> bool:
    """
    True iff some Gibbs-preserving stochastic map sends p to q.

    The curves are compared at the union of both breakpoint sets.
    """
    if tol < 0:
        raise ValidationError("Feasibility tolerance must be non-negative")
    _check_pair(q, w)
    curve_p = thermo_lorenz_curve(p, w)
    curve_q = thermo_lorenz_curve(q, w)
    xs = np.union1d(curve_p.x, curve_q.x)
    gap = float(np.min(curve_p(xs) - curve_q(xs)))
    return gap >= -tol


def critical_t(
    builder: Callable[[float], Tuple[ClassicalDistribution, ClassicalDistribution]],
    p: ClassicalDistribution,
    lo: float,
    hi: float,
    tol: float = BISECTION_TOLERANCE,
    feasibility_tol: float = FEASIBILITY_TOLERANCE
) -> float:
    """
    Largest parameter t for which p thermo-majorizes the target built at t.

    Args:
        builder: Maps t to (target q(t), Gibbs weights w(t))
        p: Source distribution
        lo: Parameter where the transition is feasible
        hi: Parameter where it is not

    Raises:
        SearchError: If the bracket does not straddle the switch point
    """
    def feasible(t: float) -> bool:
        q, w = builder(t)
        return thermo_majorizes(p, q, w, feasibility_tol)

    try:
        t_c = bisect_boundary(feasible, lo, hi, tol)
    except SearchError as e:
        raise SearchError(f"Invalid bracket [{lo}, {hi}] for critical parameter: {e}") from e
    logger.debug("Located critical parameter", lo=lo, hi=hi, t_critical=t_c)
    return t_c


@dataclass(frozen=True)
class PassiveAlignment:
    """pairing[i] is the Hamiltonian level that receives the i-th population."""

    pairing: np.ndarray
    energy: float


def passive_align(rho_spectrum: Sequence[float], h_spectrum: Sequence[float]) -> PassiveAlignment:
    """
    Anti-order populations against energies: the largest population goes on
    the lowest level. The resulting energy is min over U of tr(rho U H U^dagger).
    """
    rho_spectrum = np.asarray(rho_spectrum, dtype=float)
    h_spectrum = np.asarray(h_spectrum, dtype=float)
    if rho_spectrum.shape != h_spectrum.shape:
        raise ValidationError(f"Spectrum lengths differ: {rho_spectrum.size} vs {h_spectrum.size}")

    populations_down = np.argsort(-rho_spectrum, kind="stable")
    energies_up = np.argsort(h_spectrum, kind="stable")
    pairing = np.empty_like(populations_down)
    pairing[populations_down] = energies_up
    energy = float(np.sum(rho_spectrum * h_spectrum[pairing]))
    return PassiveAlignment(pairing=pairing, energy=energy)


def full_thermalization(w: ClassicalDistribution) -> np.ndarray:
    """Every column equals w."""
    return np.tile(w.probs[:, None], (1, w.size))


def detailed_balance_transform(w: ClassicalDistribution, i: int, j: int, strength: float) -> np.ndarray:
    """
    Partial swap between levels i and j that keeps w fixed.

    A fraction a of level i's population moves to j and b of j's moves to i
    with a * w_i = b * w_j; strength in [0, 1] scales a to its largest value.
    """
    if i == j:
        raise ValidationError("Detailed-balance transform needs two distinct levels")
    if not 0 <= strength <= 1:
        raise ValidationError(f"strength must lie in [0, 1], got {strength}")
    wi, wj = w.probs[i], w.probs[j]
    a = strength * min(1.0, wj / wi)
    b = a * wi / wj
    g = np.eye(w.size)
    g[i, i] = 1.0 - a
    g[j, i] = a
    g[j, j] = 1.0 - b
    g[i, j] = b
    return g


def compose_gibbs_fixing_map(
    w: ClassicalDistribution,
    identity_weight: float,
    thermal_weight: float,
    transforms: Sequence[np.ndarray] = ()
) -> np.ndarray:
    """
    Convex combination of the identity, full thermalization and the product
    of the given w-preserving transforms (weight 1 - identity - thermal).
    """
    rest = 1.0 - identity_weight - thermal_weight
    if min(identity_weight, thermal_weight) < 0 or rest < -PSD_TOLERANCE:
        raise ValidationError("Mixture weights must be non-negative and sum to at most 1")
    product = np.eye(w.size)
    for transform in transforms:
        product = transform @ product
    return identity_weight * np.eye(w.size) + thermal_weight * full_thermalization(w) + max(rest, 0.0) * product


def random_gibbs_fixing_map(
    w: ClassicalDistribution,
    seed: Optional[int] = None,
    max_transforms: int = 6
) -> np.ndarray:
    """
    Random column-stochastic matrix with w as a fixed point.

    Built from a Dirichlet-weighted mixture of the identity, full
    thermalization and a random product of detailed-balance transforms.
    """
    if np.min(w.probs) <= 0:
        raise ValidationError("Gibbs weights must be strictly positive")
    rng = np.random.default_rng(seed)
    identity_weight, thermal_weight, _ = rng.dirichlet(np.ones(3))
    transforms = []
    if w.size > 1:
        for _ in range(int(rng.integers(1, max_transforms + 1))):
            i, j = rng.choice(w.size, size=2, replace=False)
            transforms.append(detailed_balance_transform(w, int(i), int(j), float(rng.uniform())))
    return compose_gibbs_fixing_map(w, identity_weight, thermal_weight, transforms)
