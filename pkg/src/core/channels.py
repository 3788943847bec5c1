"""
Thermalizing maps: thermal contact (TC) and classical Gibbs-preserving maps.

Thermal operations are modelled by classical Gibbs-preserving (GP) maps:
for states diagonal in the Hamiltonian eigenbasis both classes reach the
same outputs. A GP map acts on populations in the eigenbasis of the
Hamiltonian it was declared against (ascending energy order), so it only
accepts states that are diagonal in that basis.

Bit convention: populations are ordered (ground, excited). The textbook
form of G_Delta^r is written on (excited, ground); gp_bit_map returns the
same matrix conjugated by the swap of the two levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from src.config.logging_config import get_logger
from src.config.settings import (
    DIAGONAL_TOLERANCE,
    FIXED_POINT_TOLERANCE,
    MEMBERSHIP_TOLERANCE,
)
from src.core.errors import ScopeError, ValidationError
from src.core.quantum_core import (
    DensityMatrix,
    HermitianOperator,
    Pair,
    ThermoContext,
    eig_hermitian,
    is_diagonal_in,
    populations_in,
)
from src.core.thermo_core import gibbs_state, thermal_excitation
from src.core.validators import validate_column_stochastic, validate_probability

logger = get_logger(__name__)


class MapKind(str, Enum):
    """Thermalizing map classes."""
    THERMAL_CONTACT = "thermal_contact"
    CLASSICAL_GP = "classical_gp"


def gibbs_weights(h: HermitianOperator, ctx: ThermoContext) -> np.ndarray:
    """Gibbs populations of H in ascending energy order."""
    shifted = -ctx.beta * (h.spectrum - h.spectrum.min())
    weights = np.exp(shifted)
    return weights / weights.sum()


@dataclass(frozen=True, eq=False)
class ThermalizingMap:
    """
    TC (no data) or a classical GP map declared against a Hamiltonian.

    For CLASSICAL_GP, `matrix` is column-stochastic on populations in the
    columns of `basis`, the eigenbasis of `hamiltonian`.
    """

    kind: MapKind
    matrix: Optional[np.ndarray] = None
    hamiltonian: Optional[HermitianOperator] = None
    basis: Optional[np.ndarray] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.kind is MapKind.THERMAL_CONTACT:
            return
        if self.matrix is None or self.hamiltonian is None or self.beta is None:
            raise ValidationError("Classical GP maps need a matrix, a Hamiltonian and beta")
        matrix = np.array(np.real_if_close(self.matrix), dtype=float)
        ok, error = validate_column_stochastic(matrix)
        if not ok:
            raise ValidationError(error)
        if matrix.shape[0] != self.hamiltonian.dim:
            raise ValidationError(
                f"Map dimension {matrix.shape[0]} does not match Hamiltonian dimension {self.hamiltonian.dim}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        if self.basis is None:
            _, basis = eig_hermitian(self.hamiltonian)
            basis.setflags(write=False)
            object.__setattr__(self, "basis", basis)

    @classmethod
    def thermal_contact(cls) -> "ThermalizingMap":
        return cls(kind=MapKind.THERMAL_CONTACT)

    @classmethod
    def classical_gp(
        cls,
        matrix: np.ndarray,
        hamiltonian: HermitianOperator,
        ctx: ThermoContext,
        strict: bool = True
    ) -> "ThermalizingMap":
        """
        Declare a stochastic matrix against H at inverse temperature beta.

        Raises:
            ValidationError: If strict and the Gibbs populations of H are not a fixed point
        """
        gp_map = cls(kind=MapKind.CLASSICAL_GP, matrix=matrix, hamiltonian=hamiltonian, beta=ctx.beta)
        if strict:
            residual = _fixed_point_residual(gp_map.matrix, hamiltonian, ctx)
            if residual > FIXED_POINT_TOLERANCE:
                raise ValidationError(
                    f"Map does not preserve the Gibbs state (residual {residual:.3e} > {FIXED_POINT_TOLERANCE:.1e})"
                )
        return gp_map


def _fixed_point_residual(matrix: np.ndarray, h: HermitianOperator, ctx: ThermoContext) -> float:
    weights = gibbs_weights(h, ctx)
    return float(np.max(np.abs(matrix @ weights - weights)))


def apply_map(m: ThermalizingMap, p: Pair, ctx: ThermoContext) -> Pair:
    """
    Apply a thermalizing map; the Hamiltonian is unchanged and no work is done.

    Raises:
        ValidationError: If a GP map is applied against another Hamiltonian or beta
        ScopeError: If the state has coherences in the map's basis
    """
    if m.kind is MapKind.THERMAL_CONTACT:
        return Pair(gibbs_state(p.hamiltonian, ctx).state, p.hamiltonian)

    if not m.hamiltonian.allclose(p.hamiltonian, MEMBERSHIP_TOLERANCE):
        raise ValidationError("Gibbs-preserving map was declared against a different Hamiltonian")
    if not math.isclose(m.beta, ctx.beta, rel_tol=1e-12):
        raise ValidationError(f"Map declared at beta={m.beta}, applied at beta={ctx.beta}")
    if not is_diagonal_in(p.state, m.basis, DIAGONAL_TOLERANCE):
        raise ScopeError(
            "Classical Gibbs-preserving maps act on states diagonal in the Hamiltonian eigenbasis; "
            "coherent inputs are outside the classical reduction"
        )

    populations = m.matrix @ populations_in(p.state, m.basis)
    return Pair(DensityMatrix.from_probabilities(populations, m.basis), p.hamiltonian)


def bit_hamiltonian(delta: float) -> HermitianOperator:
    """Delta |1><1| with ground energy 0."""
    return HermitianOperator.diagonal([0.0, delta])


def bit_boltzmann_factor(delta: float, ctx: ThermoContext) -> float:
    """e^{-beta |Delta|}: the ratio of upper to lower Gibbs weight for either sign of the gap."""
    return math.exp(-ctx.beta * abs(delta))


def gp_bit_map(delta: float, r: float, ctx: ThermoContext) -> ThermalizingMap:
    """
    The Gibbs-preserving bit map G_Delta^r in (lower, upper) level order.

    r = 1 is the identity; r = 0 moves the full lower population up by
    e^{-beta |Delta|} (maximal anomalous transfer). For Delta < 0 the lower
    level is |1>.
    """
    ok, error = validate_probability(r, "r")
    if not ok:
        raise ValidationError(error)
    boltzmann = bit_boltzmann_factor(delta, ctx)
    matrix = np.array([
        [1 - (1 - r) * boltzmann, 1 - r],
        [(1 - r) * boltzmann, r],
    ])
    return ThermalizingMap.classical_gp(matrix, bit_hamiltonian(delta), ctx)


def bit_output_excitation(p_e: float, delta: float, r: float, ctx: ThermoContext) -> float:
    """Upper-level population after G_Delta^r: e^{-beta |Delta|}(1 - r)(1 - p_e) + r p_e."""
    return bit_boltzmann_factor(delta, ctx) * (1 - r) * (1 - p_e) + r * p_e


def anomalous_transfer_threshold(delta: float, ctx: ThermoContext) -> float:
    """
    Largest input excitation p_e for which the r = 0 map still reaches the
    thermal excitation: p_e* = 1 - 1/Z(Delta).
    """
    if delta <= 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    return thermal_excitation(delta, ctx)


def verify_gibbs_preserving(m: ThermalizingMap, h: HermitianOperator, ctx: ThermoContext) -> float:
    """
    Max-norm residual of G w - w for the Gibbs populations w of H.

    Raises:
        ValidationError: If the map was declared against another Hamiltonian
    """
    if m.kind is MapKind.THERMAL_CONTACT:
        return 0.0
    if m.matrix.shape[0] != h.dim:
        raise ValidationError(f"Map dimension {m.matrix.shape[0]} does not match Hamiltonian dimension {h.dim}")
    if not m.hamiltonian.allclose(h, MEMBERSHIP_TOLERANCE):
        raise ValidationError("Gibbs-preserving map was declared against a different Hamiltonian")
    residual = _fixed_point_residual(m.matrix, h, ctx)
    logger.debug("Checked Gibbs preservation", dim=h.dim, residual=residual)
    return residual
