"""
Work-extraction protocols: ordered unitary and thermalizing steps.

A unitary step (U, h_end) takes (rho, H) to (U rho U^dagger, h_end) and
extracts tr(rho H) - tr(U rho U^dagger h_end). A quench is a unitary step
with U = 1. Thermalizing steps extract no work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Tuple

import numpy as np

from src.config.logging_config import get_logger
from src.config.settings import DEFAULT_N_STEPS
from src.core.channels import MapKind, ThermalizingMap, apply_map, gibbs_weights
from src.core.errors import ConstraintError, ValidationError
from src.core.families import FamilyKind, HamiltonianFamily
from src.core.majorization import ClassicalDistribution, random_gibbs_fixing_map
from src.core.quantum_core import HermitianOperator, Pair, ThermoContext, unitary_conjugate
from src.core.validators import validate_unitary
from src.utils.sampling import random_unitary

logger = get_logger(__name__)


class StepKind(str, Enum):
    UNITARY = "unitary"
    THERMALIZE = "thermalize"


@dataclass(frozen=True, eq=False)
class ProtocolStep:
    """Unitary {U, h_end} (U = None means identity) or Thermalize {map}."""

    kind: StepKind
    unitary: Optional[np.ndarray] = None
    h_end: Optional[HermitianOperator] = None
    thermal_map: Optional[ThermalizingMap] = None

    def __post_init__(self):
        if self.kind is StepKind.UNITARY:
            if self.h_end is None:
                raise ValidationError("Unitary steps need an end Hamiltonian")
            if self.unitary is not None:
                unitary = np.array(self.unitary, dtype=complex)
                ok, error = validate_unitary(unitary)
                if not ok:
                    raise ValidationError(error)
                if unitary.shape[0] != self.h_end.dim:
                    raise ValidationError(
                        f"Unitary dimension {unitary.shape[0]} does not match h_end dimension {self.h_end.dim}"
                    )
                unitary.setflags(write=False)
                object.__setattr__(self, "unitary", unitary)
        elif self.thermal_map is None:
            raise ValidationError("Thermalize steps need a map")

    @classmethod
    def unitary_step(cls, unitary: np.ndarray, h_end: HermitianOperator) -> "ProtocolStep":
        return cls(kind=StepKind.UNITARY, unitary=unitary, h_end=h_end)

    @classmethod
    def quench(cls, h_end: HermitianOperator) -> "ProtocolStep":
        return cls(kind=StepKind.UNITARY, h_end=h_end)

    @classmethod
    def thermalize(cls, thermal_map: Optional[ThermalizingMap] = None) -> "ProtocolStep":
        return cls(kind=StepKind.THERMALIZE, thermal_map=thermal_map or ThermalizingMap.thermal_contact())

    @property
    def is_quench(self) -> bool:
        return self.kind is StepKind.UNITARY and self.unitary is None


@dataclass(frozen=True)
class Protocol:
    """Ordered steps; the empty protocol is the identity."""

    steps: Tuple[ProtocolStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[ProtocolStep]:
        return iter(self.steps)

    def __add__(self, other: "Protocol") -> "Protocol":
        return Protocol(self.steps + other.steps)

    @property
    def thermalizations(self) -> int:
        return sum(1 for step in self.steps if step.kind is StepKind.THERMALIZE)


@dataclass(frozen=True, eq=False)
class WorkLedger:
    """Per-step and total extracted work; trajectory holds the initial pair and the pair after every step."""

    per_step: np.ndarray
    total: float
    trajectory: Tuple[Pair, ...] = field(default=())


def step_work(before: Pair, after: Pair) -> float:
    return before.energy - after.energy


def run_protocol(
    p0: Pair,
    prot: Protocol,
    ctx: ThermoContext,
    family: Optional[HamiltonianFamily] = None,
    record_trajectory: bool = False
) -> Tuple[Pair, WorkLedger]:
    """
    Execute a protocol and account the average work of every step.

    Args:
        p0: Initial pair
        prot: Protocol to run
        ctx: Bath inverse temperature
        family: When given, the initial and every end Hamiltonian must be members
        record_trajectory: Keep every intermediate pair in the ledger

    Returns:
        Tuple[Pair, WorkLedger]: final pair and work ledger

    Raises:
        ConstraintError: If a Hamiltonian leaves the family (names the step)
        ValidationError: On dimension mismatches
    """
    if family is not None:
        ok, reason = family.validate_member(p0.hamiltonian)
        if not ok:
            raise ConstraintError(f"Initial Hamiltonian is not in the family: {reason}", step=-1)

    current = p0
    per_step: List[float] = []
    trajectory: List[Pair] = [p0] if record_trajectory else []

    for index, step in enumerate(prot):
        if step.kind is StepKind.UNITARY:
            if step.h_end.dim != current.dim:
                raise ValidationError(f"Step {index}: dimension {step.h_end.dim} does not match {current.dim}")
            if family is not None:
                ok, reason = family.validate_member(step.h_end)
                if not ok:
                    raise ConstraintError(f"Step {index} leaves the Hamiltonian family: {reason}", step=index)
            state = current.state if step.is_quench else unitary_conjugate(current.state, step.unitary)
            after = Pair(state, step.h_end)
            per_step.append(step_work(current, after))
        else:
            after = apply_map(step.thermal_map, current, ctx)
            per_step.append(0.0)
        current = after
        if record_trajectory:
            trajectory.append(current)

    ledger = WorkLedger(
        per_step=np.array(per_step, dtype=float),
        total=math.fsum(per_step),
        trajectory=tuple(trajectory),
    )
    logger.debug("Protocol executed", steps=len(prot), total_work=ledger.total)
    return current, ledger


def isothermal_segment(
    h_start: HermitianOperator,
    h_end: HermitianOperator,
    n_steps: int = DEFAULT_N_STEPS
) -> Protocol:
    """
    Quasi-static isothermal: n alternating quench / thermal-contact steps
    along H(s) = (1 - s) h_start + s h_end, s = k/n.

    Started from omega_{h_start}, the work converges to
    F(omega_{h_start}, h_start) - F(omega_{h_end}, h_end) with O(1/n) error.
    """
    if n_steps < 1:
        raise ValidationError(f"n_steps must be at least 1, got {n_steps}")
    if h_start.dim != h_end.dim:
        raise ValidationError(f"Endpoint dimensions differ: {h_start.dim} vs {h_end.dim}")

    contact = ProtocolStep.thermalize()
    steps: List[ProtocolStep] = []
    for k in range(1, n_steps + 1):
        s = k / n_steps
        h_s = h_end if k == n_steps else HermitianOperator((1 - s) * h_start.matrix + s * h_end.matrix)
        steps.append(ProtocolStep.quench(h_s))
        steps.append(contact)
    return Protocol(tuple(steps))


def optimal_tc_protocol(
    p0: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    n_steps: int = DEFAULT_N_STEPS,
    h_final: Optional[HermitianOperator] = None
) -> Protocol:
    """
    Thermal-contact protocol saturating the restricted second law.

    Rotate and quench to the penalty-minimising (sigma, H_1), thermalise, then
    return isothermally to h_final (default: the initial Hamiltonian).

    Raises:
        UnsupportedFamilyError: If no penalty minimiser exists for the family
    """
    from src.core.bounds import penalty_term

    report = penalty_term(p0, family, ctx)
    target = h_final if h_final is not None else p0.hamiltonian
    first = Protocol((
        ProtocolStep.unitary_step(report.minimizer_rotation, report.minimizer_h),
        ProtocolStep.thermalize(),
    ))
    logger.debug(
        "Built optimal thermal-contact protocol",
        family=family.kind.value,
        penalty=report.penalty,
        n_steps=n_steps
    )
    return first + isothermal_segment(report.minimizer_h, target, n_steps)


def _diagonal_member(family: HamiltonianFamily, dim: int, rng: np.random.Generator) -> HermitianOperator:
    if family.kind is FamilyKind.TWO_LEVEL_NORM_BOUNDED:
        return HermitianOperator.diagonal([0.0, rng.uniform(family.delta_min, family.delta_max)])
    if family.kind is FamilyKind.UNRESTRICTED:
        return HermitianOperator.diagonal(rng.uniform(-2.0, 2.0, dim))
    raise ValidationError("Diagonal random members exist only for unrestricted and two-level families")


def random_protocol(
    p0: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    seed: Optional[int] = None,
    length: int = 8,
    thermalizing: MapKind = MapKind.THERMAL_CONTACT
) -> Protocol:
    """
    Random protocol inside a family with at least one thermalizing step.

    THERMAL_CONTACT: random unitaries and random family members.
    CLASSICAL_GP: stays diagonal in the computational basis (permutations,
    diagonal Hamiltonians, random Gibbs-fixing maps), so p0 must be diagonal.
    """
    if length < 1:
        raise ValidationError("Random protocols need at least one step")
    rng = np.random.default_rng(seed)
    forced_contact = int(rng.integers(length))
    current_h = p0.hamiltonian
    steps: List[ProtocolStep] = []

    for index in range(length):
        if index == forced_contact or rng.uniform() < 0.4:
            if thermalizing is MapKind.THERMAL_CONTACT:
                steps.append(ProtocolStep.thermalize())
            else:
                w = ClassicalDistribution(gibbs_weights(current_h, ctx))
                matrix = random_gibbs_fixing_map(w, seed=int(rng.integers(2**31)))
                steps.append(ProtocolStep.thermalize(ThermalizingMap.classical_gp(matrix, current_h, ctx)))
            continue

        if thermalizing is MapKind.THERMAL_CONTACT:
            current_h = family.random_member(rng, dim=p0.dim)
            steps.append(ProtocolStep.unitary_step(random_unitary(p0.dim, rng), current_h))
        else:
            current_h = _diagonal_member(family, p0.dim, rng)
            permutation = np.eye(p0.dim)[rng.permutation(p0.dim)]
            steps.append(ProtocolStep.unitary_step(permutation, current_h))

    return Protocol(tuple(steps))
