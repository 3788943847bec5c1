"""
Seeded random generators for unitaries, states and Hamiltonians.
Every function takes an explicit numpy Generator; nothing touches global state.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from src.core.quantum_core import DensityMatrix, HermitianOperator


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """QR orthonormalisation of a complex Gaussian matrix, phases fixed."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_product_unitary(subsystem_dims: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    result = np.eye(1, dtype=complex)
    for dim in subsystem_dims:
        result = np.kron(result, random_unitary(dim, rng))
    return result


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianOperator:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HermitianOperator(scale * 0.5 * (z + z.conj().T))


def random_probabilities(dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(np.ones(dim))


def random_density(dim: int, rng: np.random.Generator, rank: int = 0) -> DensityMatrix:
    """Random mixed state; rank 0 means full rank."""
    columns = rank if rank > 0 else dim
    g = rng.standard_normal((dim, columns)) + 1j * rng.standard_normal((dim, columns))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.real(np.trace(rho)))


def random_diagonal_density(dim: int, rng: np.random.Generator) -> DensityMatrix:
    return DensityMatrix.from_probabilities(random_probabilities(dim, rng))
