"""
Gibbs states, partition functions and non-equilibrium free energies.

F(rho, H) = tr(rho H) - S(rho)/beta and Delta F(rho, H) = F(rho, H) - F(omega_H, H),
with omega_H = exp(-beta H)/Z. ln Z is evaluated as a shifted log-sum-exp so
that beta * ||H|| in the hundreds does not overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from src.config.logging_config import get_logger
from src.config.settings import POPULATION_FLOOR
from src.core.errors import NumericalError, ValidationError
from src.core.quantum_core import (
    DensityMatrix,
    HermitianOperator,
    Pair,
    ThermoContext,
    eig_hermitian,
    relative_entropy_from_log_spectrum,
    von_neumann_entropy,
)

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class GibbsState:
    """omega_H = exp(-beta H)/Z together with ln Z."""

    state: DensityMatrix
    hamiltonian: HermitianOperator
    beta: float
    log_partition: float

    @property
    def free_energy(self) -> float:
        """F(omega_H, H) = -ln Z / beta."""
        return -self.log_partition / self.beta

    @property
    def pair(self) -> Pair:
        return Pair(self.state, self.hamiltonian)


@dataclass(frozen=True)
class FreeEnergyReport:
    energy: float
    entropy: float
    free_energy: float
    delta_f: float


def log_partition(h: HermitianOperator, ctx: ThermoContext) -> float:
    """ln tr exp(-beta H), shifted by the largest exponent."""
    return float(logsumexp(-ctx.beta * h.spectrum))


def gibbs_state(h: HermitianOperator, ctx: ThermoContext) -> GibbsState:
    """
    Build the Gibbs state of H at inverse temperature beta.

    Args:
        h: Hamiltonian
        ctx: Thermodynamic context carrying beta

    Returns:
        GibbsState: state, Hamiltonian, beta and ln Z
    """
    eigenvalues, eigenvectors = eig_hermitian(h)
    exponents = -ctx.beta * eigenvalues
    log_z = float(logsumexp(exponents))
    weights = np.exp(exponents - log_z)
    state = DensityMatrix((eigenvectors * weights) @ eigenvectors.conj().T)
    return GibbsState(state=state, hamiltonian=h, beta=ctx.beta, log_partition=log_z)


def thermal_excitation(delta: float, ctx: ThermoContext) -> float:
    """Excited population e^{-beta Delta}/(1 + e^{-beta Delta}) of a two-level gap Delta."""
    return float(0.5 * (1.0 - math.tanh(0.5 * ctx.beta * delta)))


def free_energy_value(state: DensityMatrix, h: HermitianOperator, ctx: ThermoContext) -> float:
    """F(rho, H) without the Gibbs reference."""
    return h.expectation(state) - von_neumann_entropy(state) / ctx.beta


def free_energy(p: Pair, ctx: ThermoContext) -> FreeEnergyReport:
    """
    Non-equilibrium free energy of a pair and its distance to equilibrium.

    Returns:
        FreeEnergyReport: energy, entropy (nats), F and Delta F
    """
    energy = p.energy
    entropy = von_neumann_entropy(p.state)
    value = energy - entropy / ctx.beta
    equilibrium = -log_partition(p.hamiltonian, ctx) / ctx.beta
    return FreeEnergyReport(
        energy=energy,
        entropy=entropy,
        free_energy=value,
        delta_f=value - equilibrium,
    )


def delta_f(p: Pair, ctx: ThermoContext) -> float:
    return free_energy(p, ctx).delta_f


def delta_f_via_relative_entropy(p: Pair, ctx: ThermoContext) -> float:
    """
    Delta F(rho, H) = D(rho || omega_H)/beta.

    The divergence is taken in the eigenbasis of H with
    ln omega_i = -beta E_i - ln Z, so every Gibbs weight counts as support.

    Raises:
        NumericalError: If the divergence comes out non-finite
    """
    eigenvalues, eigenvectors = eig_hermitian(p.hamiltonian)
    exponents = -ctx.beta * eigenvalues
    log_weights = exponents - logsumexp(exponents)
    divergence = relative_entropy_from_log_spectrum(p.state, log_weights, eigenvectors)
    if not math.isfinite(divergence):
        raise NumericalError(f"Relative entropy to the Gibbs state is not finite: {divergence}")
    return divergence / ctx.beta


def peierls_residual(a: HermitianOperator, b: HermitianOperator, ctx: ThermoContext) -> float:
    """
    Slack in F(omega_{A+B}, A+B) <= F(omega_A, A) + tr(omega_A B).

    The residual equals D(omega_A || omega_{A+B})/beta and is non-negative.
    """
    if a.dim != b.dim:
        raise ValidationError(f"Dimension mismatch: {a.dim} vs {b.dim}")
    omega_a = gibbs_state(a, ctx)
    total = a + b
    upper = omega_a.free_energy + b.expectation(omega_a.state)
    residual = upper + log_partition(total, ctx) / ctx.beta
    logger.debug("Computed Peierls-Bogoliubov residual", dim=a.dim, residual=residual)
    return residual


def gibbs_hamiltonian(rho: DensityMatrix, ctx: ThermoContext) -> HermitianOperator:
    """
    Hamiltonian whose Gibbs state is rho: H* = -ln(rho)/beta, ground energy 0.

    Populations below the configured floor are raised to it, so for states
    with a kernel omega_{H*} matches rho only up to that floor.
    """
    eigenvalues, eigenvectors = eig_hermitian(HermitianOperator(rho.matrix))
    populations = np.clip(eigenvalues, POPULATION_FLOOR, None)
    energies = -np.log(populations) / ctx.beta
    energies -= energies.min()
    return HermitianOperator((eigenvectors * energies) @ eigenvectors.conj().T)
