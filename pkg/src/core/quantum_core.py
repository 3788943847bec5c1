"""
Dense Hermitian linear algebra, quantum states and entropies.

Energies are dimensionless (measured in units of 1/beta) and all
logarithms are natural, so entropies come out in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la
from scipy.special import entr

from src.config.logging_config import get_logger
from src.config.settings import PSD_TOLERANCE, SUPPORT_THRESHOLD
from src.core.errors import ValidationError
from src.core.validators import (
    validate_density,
    validate_hermitian,
    validate_positive,
    validate_subsystem_dims,
    validate_unitary,
)

logger = get_logger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[complex]]]


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


def max_entry_norm(matrix: np.ndarray) -> float:
    """Largest absolute entry of a matrix or vector."""
    return float(np.max(np.abs(matrix))) if np.size(matrix) else 0.0


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian matrix: a Hamiltonian or an observable."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        ok, error = validate_hermitian(matrix)
        if not ok:
            raise ValidationError(error)
        object.__setattr__(self, "matrix", _frozen(0.5 * (matrix + matrix.conj().T)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def zeros(cls, dim: int) -> "HermitianOperator":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim))

    @cached_property
    def spectrum(self) -> np.ndarray:
        return _frozen(la.eigvalsh(self.matrix))

    def expectation(self, state: "DensityMatrix") -> float:
        """tr(rho H), real by construction."""
        return float(np.real(np.trace(state.matrix @ self.matrix)))

    def allclose(self, other: "HermitianOperator", tol: float = 1e-10) -> bool:
        return self.dim == other.dim and max_entry_norm(self.matrix - other.matrix) <= tol

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix + other.matrix)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix - other.matrix)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(float(scalar) * self.matrix)

    __rmul__ = __mul__

    def __neg__(self) -> "HermitianOperator":
        return HermitianOperator(-self.matrix)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive semidefinite, unit-trace operator."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        ok, error = validate_density(matrix)
        if not ok:
            raise ValidationError(error)
        matrix = 0.5 * (matrix + matrix.conj().T)
        # Trace drift is within tolerance here; renormalise so it cannot accumulate over long protocols
        matrix = matrix / np.real(np.trace(matrix))
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_probabilities(
        cls,
        probs: Sequence[float],
        basis: Optional[np.ndarray] = None
    ) -> "DensityMatrix":
        """State diagonal in `basis` (columns) with the given populations."""
        probs = np.asarray(probs, dtype=float)
        if basis is None:
            return cls(np.diag(probs))
        return cls(basis @ np.diag(probs) @ basis.conj().T)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def excitation(cls, p: float) -> "DensityMatrix":
        """Qubit state diag(1 - p, p); index 1 is the excited level."""
        return cls(np.diag([1.0 - p, p]))

    @classmethod
    def pure(cls, vector: Sequence[complex]) -> "DensityMatrix":
        vector = np.asarray(vector, dtype=complex)
        vector = vector / np.linalg.norm(vector)
        return cls(np.outer(vector, vector.conj()))

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues ascending, with PSD noise clipped to zero."""
        return _frozen(np.clip(la.eigvalsh(self.matrix), 0.0, None))

    def allclose(self, other: "DensityMatrix", tol: float = 1e-10) -> bool:
        return self.dim == other.dim and max_entry_norm(self.matrix - other.matrix) <= tol


@dataclass(frozen=True, eq=False)
class Pair:
    """A configuration (rho, H) evolved by a protocol."""

    state: DensityMatrix
    hamiltonian: HermitianOperator

    def __post_init__(self):
        if self.state.dim != self.hamiltonian.dim:
            raise ValidationError(
                f"State dimension {self.state.dim} does not match Hamiltonian dimension {self.hamiltonian.dim}"
            )

    @property
    def dim(self) -> int:
        return self.state.dim

    @property
    def energy(self) -> float:
        return self.hamiltonian.expectation(self.state)


@dataclass(frozen=True)
class ThermoContext:
    """Bath inverse temperature."""

    beta: float

    def __post_init__(self):
        ok, error = validate_positive(self.beta, "beta")
        if not ok:
            raise ValidationError(error)


PAULI_MATRICES = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(label: str) -> HermitianOperator:
    """Single-qubit Pauli operator by label ('i', 'x', 'y', 'z')."""
    try:
        return HermitianOperator(PAULI_MATRICES[label.lower()])
    except KeyError:
        raise ValidationError(f"Unknown Pauli label {label!r}") from None


def as_hermitian(operator: Union[HermitianOperator, ArrayLike]) -> HermitianOperator:
    if isinstance(operator, HermitianOperator):
        return operator
    return HermitianOperator(np.asarray(operator))


def eig_hermitian(h: Union[HermitianOperator, ArrayLike]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition H = U diag(lambda) U^dagger.

    Args:
        h: Hermitian operator (raw arrays are validated first)

    Returns:
        Tuple[np.ndarray, np.ndarray]: ascending eigenvalues, unitary eigenvector matrix

    Raises:
        ValidationError: If the input is not Hermitian
    """
    h = as_hermitian(h)
    eigenvalues, eigenvectors = la.eigh(h.matrix)
    return eigenvalues, eigenvectors


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -sum lambda ln lambda in nats, with 0 ln 0 = 0."""
    return float(np.sum(entr(rho.spectrum)))


def relative_entropy_from_log_spectrum(
    rho: DensityMatrix,
    log_values: np.ndarray,
    vectors: np.ndarray
) -> float:
    """
    D(rho || sigma) for sigma = V diag(exp(log_values)) V^dagger.

    Gibbs states pass their log-weights here, which stay finite when the
    weights themselves underflow.
    """
    populations = np.real(np.einsum("ij,jk,ki->i", vectors.conj().T, rho.matrix, vectors))
    value = -von_neumann_entropy(rho) - float(np.dot(populations, log_values))
    return max(value, 0.0) if value > -PSD_TOLERANCE else value


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """
    Quantum relative entropy D(rho || sigma) in nats.

    Returns math.inf when rho has weight outside the support of sigma
    (eigenvalues of sigma at or below the support threshold times its
    largest eigenvalue).
    """
    if rho.dim != sigma.dim:
        raise ValidationError(f"Dimension mismatch: {rho.dim} vs {sigma.dim}")

    sigma_values, sigma_vectors = la.eigh(sigma.matrix)
    populations = np.real(np.einsum("ij,jk,ki->i", sigma_vectors.conj().T, rho.matrix, sigma_vectors))
    supported = sigma_values > SUPPORT_THRESHOLD * sigma_values.max()
    if np.sum(populations[~supported]) > SUPPORT_THRESHOLD:
        logger.debug("Support violation in relative entropy", leaked=float(np.sum(populations[~supported])))
        return math.inf

    return relative_entropy_from_log_spectrum(rho, np.log(sigma_values[supported]), sigma_vectors[:, supported])


def unitary_conjugate(rho: DensityMatrix, unitary: np.ndarray) -> DensityMatrix:
    """
    Return U rho U^dagger.

    Raises:
        ValidationError: If U is not unitary within tolerance
    """
    unitary = np.asarray(unitary, dtype=complex)
    ok, error = validate_unitary(unitary)
    if not ok:
        raise ValidationError(error)
    if unitary.shape[0] != rho.dim:
        raise ValidationError(f"Unitary dimension {unitary.shape[0]} does not match state dimension {rho.dim}")
    return DensityMatrix(unitary @ rho.matrix @ unitary.conj().T)


def tensor(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """Kronecker product a (x) b."""
    return HermitianOperator(np.kron(a.matrix, b.matrix))


def tensor_all(operators: Sequence[HermitianOperator]) -> HermitianOperator:
    result = operators[0]
    for operator in operators[1:]:
        result = tensor(result, operator)
    return result


def embed(operator: HermitianOperator, site: int, subsystem_dims: Sequence[int]) -> HermitianOperator:
    """Place a single-site operator on `site`, identity elsewhere."""
    ok, error = validate_subsystem_dims(subsystem_dims)
    if not ok:
        raise ValidationError(error)
    if not 0 <= site < len(subsystem_dims):
        raise ValidationError(f"Site {site} out of range for {len(subsystem_dims)} subsystems")
    if operator.dim != subsystem_dims[site]:
        raise ValidationError(
            f"Operator dimension {operator.dim} does not match subsystem {site} dimension {subsystem_dims[site]}"
        )
    factors = [
        operator if i == site else HermitianOperator.identity(d)
        for i, d in enumerate(subsystem_dims)
    ]
    return tensor_all(factors)


def gell_mann_basis(dim: int) -> List[Tuple[str, HermitianOperator]]:
    """Traceless Hermitian basis of a d-level system (Pauli x, y, z for d = 2)."""
    if dim == 2:
        return [(label, pauli(label)) for label in ("x", "y", "z")]

    basis: List[Tuple[str, HermitianOperator]] = []
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = 1
            basis.append((f"s{j}{k}", HermitianOperator(sym)))
            anti = np.zeros((dim, dim), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            basis.append((f"a{j}{k}", HermitianOperator(anti)))
    for level in range(1, dim):
        diag = np.zeros(dim)
        diag[:level] = 1.0
        diag[level] = -level
        diag *= math.sqrt(2.0 / (level * (level + 1)))
        basis.append((f"d{level}", HermitianOperator.diagonal(diag)))
    return basis


def local_operator_basis(subsystem_dims: Sequence[int]) -> List[Tuple[str, HermitianOperator]]:
    """
    Traceless single-site operators embedded in the full space.

    Labels read "<direction>@<site>", e.g. "z@1" is 1 (x) sigma_z on two qubits.
    Elements are orthogonal in the Hilbert-Schmidt inner product.
    """
    basis = []
    for site, dim in enumerate(subsystem_dims):
        for label, operator in gell_mann_basis(dim):
            basis.append((f"{label}@{site}", embed(operator, site, subsystem_dims)))
    return basis


def is_diagonal_in(rho: DensityMatrix, basis: np.ndarray, tol: float) -> bool:
    """True when B^dagger rho B has no off-diagonal entry above tol."""
    rotated = basis.conj().T @ rho.matrix @ basis
    off_diagonal = rotated - np.diag(np.diag(rotated))
    return max_entry_norm(off_diagonal) <= tol


def populations_in(rho: DensityMatrix, basis: np.ndarray) -> np.ndarray:
    """Diagonal of rho in the given basis (real, clipped at zero)."""
    rotated = basis.conj().T @ rho.matrix @ basis
    return np.clip(np.real(np.diag(rotated)), 0.0, None)
