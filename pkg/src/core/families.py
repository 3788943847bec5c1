"""
Restricted Hamiltonian families and the unitary orbits they generate.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config.logging_config import get_logger
from src.config.settings import MEMBERSHIP_TOLERANCE
from src.core.errors import ValidationError
from src.core.quantum_core import (
    HermitianOperator,
    local_operator_basis,
    max_entry_norm,
)
from src.core.validators import validate_delta_range, validate_subsystem_dims
from src.utils.sampling import random_hermitian, random_unitary

logger = get_logger(__name__)


class FamilyKind(str, Enum):
    """Supported Hamiltonian restrictions."""
    UNRESTRICTED = "unrestricted"
    TWO_LEVEL_NORM_BOUNDED = "two_level_norm_bounded"
    LOCAL = "local"


class OrbitKind(str, Enum):
    """How the reachable unitary orbit of the initial state is handled."""
    FULL_UNITARY_GROUP = "full_unitary_group"
    FIXED_STATE = "fixed_state"
    SAMPLED_PRODUCT_UNITARIES = "sampled_product_unitaries"


@dataclass(frozen=True, eq=False)
class HamiltonianFamily:
    """
    Descriptor of an allowed set of Hamiltonians.

    UNRESTRICTED: every Hermitian operator.
    TWO_LEVEL_NORM_BOUNDED: qubit Hamiltonians with ground energy 0 and gap
        in [delta_min, delta_max], in any basis.
    LOCAL: h0 plus traceless single-site terms on the given subsystems.
    """

    kind: FamilyKind
    orbit_kind: OrbitKind
    delta_min: Optional[float] = None
    delta_max: Optional[float] = None
    h0: Optional[HermitianOperator] = None
    subsystem_dims: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind is FamilyKind.TWO_LEVEL_NORM_BOUNDED:
            ok, error = validate_delta_range(self.delta_min, self.delta_max)
            if not ok:
                raise ValidationError(error)
        elif self.kind is FamilyKind.LOCAL:
            if self.h0 is None:
                raise ValidationError("Local family needs a reference Hamiltonian h0")
            ok, error = validate_subsystem_dims(self.subsystem_dims, self.h0.dim)
            if not ok:
                raise ValidationError(error)
            object.__setattr__(self, "subsystem_dims", tuple(int(d) for d in self.subsystem_dims))

    @classmethod
    def unrestricted(cls) -> "HamiltonianFamily":
        return cls(kind=FamilyKind.UNRESTRICTED, orbit_kind=OrbitKind.FULL_UNITARY_GROUP)

    @classmethod
    def two_level_norm_bounded(cls, delta_min: float, delta_max: float) -> "HamiltonianFamily":
        return cls(
            kind=FamilyKind.TWO_LEVEL_NORM_BOUNDED,
            orbit_kind=OrbitKind.FULL_UNITARY_GROUP,
            delta_min=float(delta_min),
            delta_max=float(delta_max),
        )

    @classmethod
    def local(
        cls,
        h0: HermitianOperator,
        subsystem_dims: Sequence[int],
        orbit_kind: OrbitKind = OrbitKind.FIXED_STATE
    ) -> "HamiltonianFamily":
        return cls(kind=FamilyKind.LOCAL, orbit_kind=orbit_kind, h0=h0, subsystem_dims=tuple(subsystem_dims))

    @cached_property
    def local_basis(self) -> List[Tuple[str, HermitianOperator]]:
        if self.kind is not FamilyKind.LOCAL:
            return []
        return local_operator_basis(self.subsystem_dims)

    @property
    def n_local_params(self) -> int:
        return len(self.local_basis)

    def local_hamiltonian(self, params: Sequence[float]) -> HermitianOperator:
        """h0 + sum_k params[k] E_k over the local basis."""
        params = np.asarray(params, dtype=float)
        if params.size != self.n_local_params:
            raise ValidationError(f"Expected {self.n_local_params} local parameters, got {params.size}")
        matrix = self.h0.matrix.copy()
        for value, (_, operator) in zip(params, self.local_basis):
            matrix = matrix + value * operator.matrix
        return HermitianOperator(matrix)

    def local_coefficients(self, h: HermitianOperator) -> Tuple[np.ndarray, float]:
        """Project H - h0 onto the local basis; returns (coefficients, residual)."""
        x = h.matrix - self.h0.matrix
        coefficients = np.array([
            np.real(np.trace(op.matrix @ x)) / np.real(np.trace(op.matrix @ op.matrix))
            for _, op in self.local_basis
        ])
        remainder = x - sum((c * op.matrix for c, (_, op) in zip(coefficients, self.local_basis)),
                            np.zeros_like(x))
        return coefficients, max_entry_norm(remainder)

    def validate_member(
        self,
        h: HermitianOperator,
        tol: float = MEMBERSHIP_TOLERANCE
    ) -> Tuple[bool, Optional[str]]:
        """
        Membership predicate.

        Returns:
            Tuple[bool, Optional[str]]: (is_member, reason)
        """
        if self.kind is FamilyKind.UNRESTRICTED:
            return True, None

        if self.kind is FamilyKind.TWO_LEVEL_NORM_BOUNDED:
            if h.dim != 2:
                return False, f"Two-level family needs dimension 2, got {h.dim}"
            ground, gap = h.spectrum
            if abs(ground) > tol:
                return False, f"Ground energy must be 0, got {ground:.12g}"
            if gap < self.delta_min - tol or gap > self.delta_max + tol:
                return False, f"Gap {gap:.12g} outside [{self.delta_min}, {self.delta_max}]"
            return True, None

        if h.dim != self.h0.dim:
            return False, f"Dimension {h.dim} does not match h0 dimension {self.h0.dim}"
        _, residual = self.local_coefficients(h)
        if residual > tol:
            return False, f"H - h0 has a non-local component (residual {residual:.3e})"
        return True, None

    def contains(self, h: HermitianOperator) -> bool:
        return self.validate_member(h)[0]

    def random_member(self, rng: np.random.Generator, dim: int = 2, scale: float = 1.0) -> HermitianOperator:
        """Draw a member (dim only matters for the unrestricted family)."""
        if self.kind is FamilyKind.UNRESTRICTED:
            return random_hermitian(dim, rng, scale)
        if self.kind is FamilyKind.TWO_LEVEL_NORM_BOUNDED:
            gap = rng.uniform(self.delta_min, self.delta_max)
            u = random_unitary(2, rng)
            return HermitianOperator(u @ np.diag([0.0, gap]) @ u.conj().T)
        return self.local_hamiltonian(rng.uniform(-scale, scale, self.n_local_params))

    def describe(self) -> Dict[str, Any]:
        """Plain description for reports."""
        description: Dict[str, Any] = {"kind": self.kind.value, "orbit_kind": self.orbit_kind.value}
        if self.kind is FamilyKind.TWO_LEVEL_NORM_BOUNDED:
            description.update(delta_min=self.delta_min, delta_max=self.delta_max)
        if self.kind is FamilyKind.LOCAL:
            description.update(subsystem_dims=list(self.subsystem_dims))
        return description
