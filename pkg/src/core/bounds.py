"""
Second law under restricted control.

For protocols with at least one thermalizing step and Hamiltonians drawn
from a family, the extracted work obeys

    W <= F(rho_0, H_0) - F(rho_f, H_f) - inf Delta F(sigma, H),

the infimum running over family members H and states sigma in the
reachable unitary orbit of rho_0. This module evaluates that penalty for
the supported families, certifies local passivity of product-involution
Hamiltonians, and runs the two worked examples (norm-bounded qubit,
two-qubit local fields).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg as la
from scipy.special import logsumexp

from src.config.logging_config import get_logger
from src.config.settings import (
    EXAMPLE_I_GRID_POINTS,
    FEASIBILITY_TOLERANCE,
    LOCAL_FIELD_BOUND,
    MEMBERSHIP_TOLERANCE,
    MULTI_STARTS,
    ORBIT_SAMPLES,
    PASSIVITY_TOLERANCE,
)
from src.core.channels import bit_hamiltonian, bit_output_excitation
from src.core.errors import ScopeError, UnsupportedFamilyError, ValidationError
from src.core.families import FamilyKind, HamiltonianFamily, OrbitKind
from src.core.majorization import (
    ClassicalDistribution,
    critical_t,
    passive_align,
    thermo_lorenz_curve,
    thermo_majorizes,
)
from src.core.quantum_core import (
    DensityMatrix,
    HermitianOperator,
    Pair,
    ThermoContext,
    eig_hermitian,
    embed,
    local_operator_basis,
    max_entry_norm,
    pauli,
    tensor,
    unitary_conjugate,
    von_neumann_entropy,
)
from src.core.thermo_core import (
    delta_f,
    free_energy,
    gibbs_hamiltonian,
    gibbs_state,
    peierls_residual,
    thermal_excitation,
)
from src.core.validators import validate_delta_range, validate_probability
from src.utils.sampling import random_product_unitary
from src.utils.search import bracketed_minimum, grid_points, multi_start_minimize

__all__ = [
    "FamilyKind",
    "HamiltonianFamily",
    "OrbitKind",
    "PenaltyReport",
    "penalty_term",
    "second_law_bound",
    "check_second_law",
    "cyclic_work_bound",
    "PassivityCertificate",
    "local_passivity_certificate",
    "ExampleIReport",
    "example_i_analysis",
    "ExampleIIReport",
    "example_ii_analysis",
    "example_ii_critical_t",
    "example_ii_curves",
    "ExampleIIGap",
    "example_ii_gap",
]

logger = get_logger(__name__)

BOUND_EXACT = "exact"
BOUND_UPPER = "upper"

# Grid points spent on the diagonal-field scan when there are more than two sites
_FIELD_GRID_BUDGET = 4096
_INVOLUTION_TOLERANCE = 1e-10
_GRADIENT_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class PenaltyReport:
    """
    Minimum of Delta F over the family and the reachable orbit.

    minimizer_state = U rho_0 U^dagger with U = minimizer_rotation, and
    penalty = Delta F(minimizer_state, minimizer_h). bound_direction is
    "upper" when the orbit was only sampled.
    """

    penalty: float
    minimizer_h: HermitianOperator
    minimizer_state: DensityMatrix
    minimizer_rotation: np.ndarray
    method: str
    bound_direction: str = BOUND_EXACT
    evaluations: int = 0

    def summary(self) -> Dict[str, Any]:
        return {
            "penalty": self.penalty,
            "method": self.method,
            "bound_direction": self.bound_direction,
            "minimizer_spectrum": self.minimizer_h.spectrum.tolist(),
            "evaluations": self.evaluations,
        }


def _log_z(matrix: np.ndarray, beta: float) -> float:
    return float(logsumexp(-beta * la.eigvalsh(matrix)))


def _basis_stack(basis: Sequence[Tuple[str, HermitianOperator]]) -> np.ndarray:
    return np.array([operator.matrix for _, operator in basis])


def _is_maximally_mixed(rho: DensityMatrix) -> bool:
    return max_entry_norm(rho.matrix - np.eye(rho.dim) / rho.dim) <= MEMBERSHIP_TOLERANCE


def _passive_rotation(rho: DensityMatrix, h: HermitianOperator) -> np.ndarray:
    """Unitary sending the eigenbasis of rho onto that of h, largest population on the lowest level."""
    rho_values, rho_vectors = eig_hermitian(HermitianOperator(rho.matrix))
    h_values, h_vectors = eig_hermitian(h)
    alignment = passive_align(rho_values, h_values)
    return h_vectors[:, alignment.pairing] @ rho_vectors.conj().T


def _field_starts(
    objective,
    n_params: int,
    n_starts: int,
    bound: float,
    rng: np.random.Generator
) -> List[np.ndarray]:
    """Origin, best point of a 3-per-axis grid (when small) and uniform draws."""
    starts = [np.zeros(n_params)]
    if 3 ** n_params <= 20000:
        coarse = grid_points(bound, 3, n_params)
        values = [objective(x) for x in coarse]
        starts.append(coarse[int(np.argmin(values))])
    while len(starts) < max(n_starts, 1):
        starts.append(rng.uniform(-bound, bound, n_params))
    return starts


def _unrestricted_penalty(p0: Pair, ctx: ThermoContext) -> PenaltyReport:
    """Zero penalty: the modular Hamiltonian of rho_0 is always in the family.

    The penalty is reported as exactly 0.0. For rank-deficient rho_0 the kernel
    eigenvalues are clipped to POPULATION_FLOOR by gibbs_hamiltonian, so
    minimizer_h has finite energies and its Gibbs state matches rho_0 only up
    to that floor.
    """
    h_star = gibbs_hamiltonian(p0.state, ctx)
    return PenaltyReport(
        penalty=0.0,
        minimizer_h=h_star,
        minimizer_state=p0.state,
        minimizer_rotation=np.eye(p0.dim, dtype=complex),
        method="unrestricted:gibbs_hamiltonian",
    )


def _two_level_penalty_reduced(p0: Pair, family: HamiltonianFamily, ctx: ThermoContext) -> PenaltyReport:
    """Passive reduction: only the smaller eigenvalue of rho_0 matters; 1-D search over the gap."""
    p_e = float(min(p0.state.spectrum[0], 0.5))
    ground_state = DensityMatrix.excitation(p_e)

    def objective(gap: float) -> float:
        return delta_f(Pair(ground_state, bit_hamiltonian(gap)), ctx)

    gap_star, _ = bracketed_minimum(objective, family.delta_min, family.delta_max)
    h_star = bit_hamiltonian(gap_star)
    rotation = _passive_rotation(p0.state, h_star)
    state = unitary_conjugate(p0.state, rotation)
    return PenaltyReport(
        penalty=max(delta_f(Pair(state, h_star), ctx), 0.0),
        minimizer_h=h_star,
        minimizer_state=state,
        minimizer_rotation=rotation,
        method="two_level:passive_reduction",
    )


def _two_level_member(params: np.ndarray) -> np.ndarray:
    phi, theta, gap = params
    psi = np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])
    return gap * np.outer(psi, psi.conj())


def _two_level_penalty_search(
    p0: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    workers: int
) -> PenaltyReport:
    """Direct search over members gap * |psi><psi| at fixed state (no passive reduction)."""
    entropy = von_neumann_entropy(p0.state)
    rho = p0.state.matrix

    def objective(params: np.ndarray) -> float:
        h = _two_level_member(params)
        energy = float(np.real(np.trace(rho @ h)))
        return energy - entropy / ctx.beta + _log_z(h, ctx.beta) / ctx.beta

    coarse = [
        np.array([phi, theta, gap])
        for phi in np.linspace(0, 2 * math.pi, 6, endpoint=False)
        for theta in np.linspace(0, math.pi, 7)
        for gap in np.linspace(family.delta_min, family.delta_max, 5)
    ]
    ranked = sorted(range(len(coarse)), key=lambda i: (objective(coarse[i]), i))
    starts = [coarse[i] for i in ranked[:4]]
    result = multi_start_minimize(
        objective,
        starts,
        bounds=[(None, None), (None, None), (family.delta_min, family.delta_max)],
        workers=workers,
    )
    h_star = HermitianOperator(_two_level_member(result.x))
    return PenaltyReport(
        penalty=max(delta_f(Pair(p0.state, h_star), ctx), 0.0),
        minimizer_h=h_star,
        minimizer_state=p0.state,
        minimizer_rotation=np.eye(2, dtype=complex),
        method="two_level:direct_search",
        evaluations=result.evaluations + len(coarse),
    )


def _local_fixed_state_penalty(
    p0: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    rng: np.random.Generator,
    n_starts: int,
    workers: int
) -> PenaltyReport:
    """
    rho_0 proportional to 1: Delta F(1/d, h0 + X) differs from ln Z(h0 + X)/beta
    by a constant, and ln Z is convex in the local fields.
    """
    if not _is_maximally_mixed(p0.state):
        raise UnsupportedFamilyError(
            "Fixed-state orbit requires a unitarily invariant initial state (maximally mixed); "
            "use the sampled product-unitary orbit for an upper bound"
        )
    h0 = family.h0.matrix
    stack = _basis_stack(family.local_basis)

    def objective(x: np.ndarray) -> float:
        return _log_z(h0 + np.tensordot(x, stack, axes=1), ctx.beta)

    bound = LOCAL_FIELD_BOUND
    starts = _field_starts(objective, family.n_local_params, n_starts, bound, rng)
    result = multi_start_minimize(objective, starts, bounds=[(-bound, bound)] * family.n_local_params, workers=workers)
    h_star = family.local_hamiltonian(result.x)
    return PenaltyReport(
        penalty=max(delta_f(Pair(p0.state, h_star), ctx), 0.0),
        minimizer_h=h_star,
        minimizer_state=p0.state,
        minimizer_rotation=np.eye(p0.dim, dtype=complex),
        method="local:fixed_state",
        evaluations=result.evaluations,
    )


def _local_full_orbit_penalty(
    p0: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    rng: np.random.Generator,
    n_starts: int,
    workers: int
) -> PenaltyReport:
    """Full unitary orbit: the state enters only through its passive energy against h0 + X."""
    populations_down = np.sort(p0.state.spectrum)[::-1]
    entropy = von_neumann_entropy(p0.state)
    h0 = family.h0.matrix
    stack = _basis_stack(family.local_basis)

    def objective(x: np.ndarray) -> float:
        energies = la.eigvalsh(h0 + np.tensordot(x, stack, axes=1))
        passive_energy = float(np.dot(populations_down, energies))
        return passive_energy - entropy / ctx.beta + float(logsumexp(-ctx.beta * energies)) / ctx.beta

    bound = LOCAL_FIELD_BOUND
    starts = _field_starts(objective, family.n_local_params, n_starts, bound, rng)
    result = multi_start_minimize(objective, starts, bounds=[(-bound, bound)] * family.n_local_params, workers=workers)
    h_star = family.local_hamiltonian(result.x)
    rotation = _passive_rotation(p0.state, h_star)
    state = unitary_conjugate(p0.state, rotation)
    return PenaltyReport(
        penalty=max(delta_f(Pair(state, h_star), ctx), 0.0),
        minimizer_h=h_star,
        minimizer_state=state,
        minimizer_rotation=rotation,
        method="local:full_orbit",
        evaluations=result.evaluations,
    )


def _local_sampled_penalty(
    p0: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    rng: np.random.Generator,
    workers: int
) -> PenaltyReport:
    """Minimum over sampled product unitaries: an upper bound on the true penalty."""
    h0 = family.h0.matrix
    stack = _basis_stack(family.local_basis)
    bound = LOCAL_FIELD_BOUND
    rotations = [np.eye(p0.dim, dtype=complex)]
    rotations += [random_product_unitary(family.subsystem_dims, rng) for _ in range(ORBIT_SAMPLES)]

    best: Optional[Tuple[float, np.ndarray, np.ndarray]] = None
    evaluations = 0
    for rotation in rotations:
        state = unitary_conjugate(p0.state, rotation)
        rho = state.matrix
        entropy = von_neumann_entropy(state)

        def objective(x: np.ndarray, rho=rho, entropy=entropy) -> float:
            h = h0 + np.tensordot(x, stack, axes=1)
            energy = float(np.real(np.trace(rho @ h)))
            return energy - entropy / ctx.beta + _log_z(h, ctx.beta) / ctx.beta

        starts = [np.zeros(family.n_local_params), rng.uniform(-bound, bound, family.n_local_params)]
        result = multi_start_minimize(objective, starts, bounds=[(-bound, bound)] * family.n_local_params,
                                      workers=workers)
        evaluations += result.evaluations
        if best is None or result.value < best[0]:
            best = (result.value, result.x, rotation)

    _, x_best, rotation = best
    h_star = family.local_hamiltonian(x_best)
    state = unitary_conjugate(p0.state, rotation)
    return PenaltyReport(
        penalty=max(delta_f(Pair(state, h_star), ctx), 0.0),
        minimizer_h=h_star,
        minimizer_state=state,
        minimizer_rotation=rotation,
        method="local:sampled_product_unitaries",
        bound_direction=BOUND_UPPER,
        evaluations=evaluations,
    )


def penalty_term(
    p0: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    use_passive_reduction: bool = True,
    seed: Optional[int] = None,
    n_starts: int = MULTI_STARTS,
    workers: int = 1
) -> PenaltyReport:
    """
    Work lost to the control restriction: min Delta F(sigma, H).

    Args:
        p0: Initial pair
        family: Allowed Hamiltonians and orbit handling
        ctx: Bath inverse temperature
        use_passive_reduction: Two-level family only; False runs the direct
            search over (basis, gap) instead of the spectral reduction
        seed: Seed for the multi-start points
        n_starts: Multi-start count for local-field searches
        workers: Threads used for the multi-start refinement

    Returns:
        PenaltyReport: penalty, minimiser and method

    Raises:
        UnsupportedFamilyError: If no evaluation exists for the family, orbit and state
        ValidationError: On dimension mismatches
    """
    rng = np.random.default_rng(seed)

    if family.kind is FamilyKind.UNRESTRICTED:
        report = _unrestricted_penalty(p0, ctx)

    elif family.kind is FamilyKind.TWO_LEVEL_NORM_BOUNDED:
        if p0.dim != 2:
            raise ValidationError(f"Two-level family needs a qubit, got dimension {p0.dim}")
        if family.orbit_kind is not OrbitKind.FULL_UNITARY_GROUP:
            raise UnsupportedFamilyError(
                f"Two-level family supports only the full unitary orbit, got {family.orbit_kind.value}"
            )
        if use_passive_reduction:
            report = _two_level_penalty_reduced(p0, family, ctx)
        else:
            report = _two_level_penalty_search(p0, family, ctx, workers)

    else:
        if p0.dim != family.h0.dim:
            raise ValidationError(f"State dimension {p0.dim} does not match h0 dimension {family.h0.dim}")
        if family.orbit_kind is OrbitKind.FIXED_STATE:
            report = _local_fixed_state_penalty(p0, family, ctx, rng, n_starts, workers)
        elif family.orbit_kind is OrbitKind.FULL_UNITARY_GROUP:
            report = _local_full_orbit_penalty(p0, family, ctx, rng, n_starts, workers)
        else:
            report = _local_sampled_penalty(p0, family, ctx, rng, workers)

    logger.debug(
        "Computed penalty term",
        family=family.kind.value,
        orbit=family.orbit_kind.value,
        method=report.method,
        penalty=report.penalty,
        bound_direction=report.bound_direction
    )
    return report


def second_law_bound(
    p0: Pair,
    pf: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    penalty: Optional[PenaltyReport] = None
) -> float:
    """F(p0) - F(pf) - penalty; a precomputed penalty report may be passed in."""
    if penalty is None:
        penalty = penalty_term(p0, family, ctx)
    return free_energy(p0, ctx).free_energy - free_energy(pf, ctx).free_energy - penalty.penalty


def cyclic_work_bound(
    p0: Pair,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    penalty: Optional[PenaltyReport] = None
) -> float:
    """Largest work of a cyclic protocol: Delta F(p0) - penalty (final pair at equilibrium)."""
    equilibrium = gibbs_state(p0.hamiltonian, ctx).pair
    return second_law_bound(p0, equilibrium, family, ctx, penalty)


def check_second_law(
    p0: Pair,
    pf: Pair,
    ledger,
    family: HamiltonianFamily,
    ctx: ThermoContext,
    tol: float = 1e-6,
    penalty: Optional[PenaltyReport] = None
) -> Tuple[bool, float]:
    """
    Runtime check of a ledger against the restricted second law.

    Returns:
        Tuple[bool, float]: (holds within tol, slack = bound - work)
    """
    slack = second_law_bound(p0, pf, family, ctx, penalty) - ledger.total
    ok = slack >= -tol
    if not ok:
        logger.warning("Second-law bound violated", family=family.kind.value, slack=slack, work=ledger.total)
    return ok, slack


@dataclass(frozen=True)
class PassivityCertificate:
    """Evidence that no local-field protocol raises F(omega_{V+X}, V+X) above F(omega_V, V)."""

    passive: bool
    stationary: bool
    in_scope: bool
    baseline_free_energy: float
    best_free_energy: float
    best_field: Dict[str, float]
    gradients: Dict[str, float]
    max_gradient: float
    min_peierls_residual: float
    gibbs_form_residual: float
    grid_size: int
    n_starts: int
    evaluations: int

    def summary(self) -> Dict[str, Any]:
        return {
            "passive": self.passive,
            "stationary": self.stationary,
            "in_scope": self.in_scope,
            "baseline_free_energy": self.baseline_free_energy,
            "best_free_energy": self.best_free_energy,
            "excess": self.best_free_energy - self.baseline_free_energy,
            "best_field": dict(self.best_field),
            "gradients": dict(self.gradients),
            "max_gradient": self.max_gradient,
            "min_peierls_residual": self.min_peierls_residual,
            "gibbs_form_residual": self.gibbs_form_residual,
            "grid_size": self.grid_size,
            "n_starts": self.n_starts,
            "evaluations": self.evaluations,
        }


def involution_factors(v: HermitianOperator, subsystem_dims: Sequence[int]) -> List[np.ndarray]:
    """
    Split v into traceless Hermitian involutions, one per site.

    Each cut is checked by realigning the operator and requiring operator
    Schmidt rank one.

    Raises:
        ValidationError: If v is not such a product
    """
    if int(np.prod(subsystem_dims)) != v.dim:
        raise ValidationError(f"Subsystem dimensions {list(subsystem_dims)} do not multiply to {v.dim}")
    if max_entry_norm(v.matrix @ v.matrix - np.eye(v.dim)) > _INVOLUTION_TOLERANCE:
        raise ValidationError("V must square to the identity")

    factors: List[np.ndarray] = []
    remainder = v.matrix
    for site, dim in enumerate(subsystem_dims[:-1]):
        rest = remainder.shape[0] // dim
        realigned = remainder.reshape(dim, rest, dim, rest).transpose(0, 2, 1, 3).reshape(dim * dim, rest * rest)
        u, s, vh = la.svd(realigned)
        if s.size > 1 and s[1] > _INVOLUTION_TOLERANCE * max(s[0], 1.0):
            raise ValidationError(f"V is not a product operator across the cut after site {site}")
        factors.append((u[:, 0] * s[0]).reshape(dim, dim))
        remainder = vh[0].reshape(rest, rest)
    factors.append(remainder)

    normalised = []
    for site, factor in enumerate(factors):
        dim = factor.shape[0]
        # Squares to c * 1; dividing by sqrt(c) leaves at most a sign
        factor = factor / np.sqrt(np.trace(factor @ factor) / dim)
        if max_entry_norm(factor @ factor - np.eye(dim)) > _INVOLUTION_TOLERANCE:
            raise ValidationError(f"Factor on site {site} is not an involution")
        if max_entry_norm(factor - factor.conj().T) > _INVOLUTION_TOLERANCE:
            raise ValidationError(f"Factor on site {site} is not Hermitian")
        if abs(np.trace(factor)) > _INVOLUTION_TOLERANCE:
            raise ValidationError(f"Factor on site {site} is not traceless")
        normalised.append(factor)

    product = normalised[0]
    for factor in normalised[1:]:
        product = np.kron(product, factor)
    if max_entry_norm(product + v.matrix) <= _INVOLUTION_TOLERANCE:
        normalised[0] = -normalised[0]
    return normalised


def local_passivity_certificate(
    v: HermitianOperator,
    subsystem_dims: Sequence[int],
    ctx: ThermoContext,
    n_starts: int = MULTI_STARTS,
    seed: Optional[int] = None,
    field_bound: float = LOCAL_FIELD_BOUND,
    grid_per_axis: int = 32,
    peierls_samples: int = 64,
    workers: int = 1
) -> PassivityCertificate:
    """
    Certify that (1/d, V) is passive under thermal contact with local fields.

    Checks the vanishing gradient tr(omega_V E) = 0 over a local operator
    basis, scans the diagonal fields on a grid, refines with multi-start
    Powell over all local fields, verifies omega_V = (1 - tanh(beta) V)/d,
    and samples the Peierls-Bogoliubov residual.

    Raises:
        ValidationError: If V is not a product of traceless involutions
    """
    involution_factors(v, subsystem_dims)
    rng = np.random.default_rng(seed)
    dims = tuple(int(d) for d in subsystem_dims)
    basis = local_operator_basis(dims)
    stack = _basis_stack(basis)
    labels = [label for label, _ in basis]

    omega = gibbs_state(v, ctx)
    baseline = omega.free_energy
    gradients = {
        label: float(np.real(np.trace(omega.state.matrix @ operator.matrix)))
        for label, operator in basis
    }
    max_gradient = max(abs(value) for value in gradients.values())
    gibbs_form = (np.eye(v.dim) - math.tanh(ctx.beta) * v.matrix) / v.dim
    gibbs_form_residual = max_entry_norm(omega.state.matrix - gibbs_form)

    def objective(x: np.ndarray) -> float:
        return _log_z(v.matrix + np.tensordot(x, stack, axes=1), ctx.beta)

    diagonal = [k for k, label in enumerate(labels) if label.split("@")[0] == "z" or label.startswith("d")]
    per_axis = grid_per_axis if len(diagonal) <= 2 else max(3, int(_FIELD_GRID_BUDGET ** (1 / len(diagonal))))
    scan = grid_points(field_bound, per_axis, len(diagonal))
    fields = np.zeros((scan.shape[0], len(labels)))
    fields[:, diagonal] = scan
    batch = v.matrix[None, :, :] + np.tensordot(fields, stack, axes=1)
    grid_values = logsumexp(-ctx.beta * np.linalg.eigvalsh(batch), axis=1)
    best_grid = int(np.argmin(grid_values))

    starts = [np.zeros(len(labels)), fields[best_grid]]
    while len(starts) < max(n_starts, 2):
        starts.append(rng.uniform(-field_bound, field_bound, len(labels)))
    result = multi_start_minimize(objective, starts, bounds=[(-field_bound, field_bound)] * len(labels),
                                  workers=workers)

    if grid_values[best_grid] < result.value:
        best_log_z, best_x = float(grid_values[best_grid]), fields[best_grid]
    else:
        best_log_z, best_x = result.value, result.x
    best_free_energy = -best_log_z / ctx.beta

    residuals = [
        peierls_residual(v, HermitianOperator(np.tensordot(rng.uniform(-field_bound, field_bound, len(labels)),
                                                           stack, axes=1)), ctx)
        for _ in range(peierls_samples)
    ]

    certificate = PassivityCertificate(
        passive=best_free_energy <= baseline + PASSIVITY_TOLERANCE,
        stationary=max_gradient <= _GRADIENT_TOLERANCE,
        in_scope=len(dims) >= 2,
        baseline_free_energy=baseline,
        best_free_energy=best_free_energy,
        best_field=dict(zip(labels, (float(x) for x in best_x))),
        gradients=gradients,
        max_gradient=max_gradient,
        min_peierls_residual=float(min(residuals)) if residuals else 0.0,
        gibbs_form_residual=gibbs_form_residual,
        grid_size=int(scan.shape[0]),
        n_starts=len(starts),
        evaluations=result.evaluations + int(scan.shape[0]),
    )
    if not certificate.in_scope:
        logger.warning("Single-site V: local fields include the global term, certificate out of scope",
                       passive=certificate.passive)
    logger.debug(
        "Local passivity certificate",
        passive=certificate.passive,
        excess=best_free_energy - baseline,
        max_gradient=max_gradient
    )
    return certificate


@dataclass(frozen=True)
class ExampleIReport:
    p0: float
    delta_min: float
    delta_max: float
    beta: float
    r: float
    thermal_excitation: float
    hypothesis_ok: bool
    tc_optimum: float
    tc_argmax_delta: float
    p_star: float
    delta_star: float
    delta_used: float
    constraint_limited: bool
    to_work: float

    def summary(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _bit_delta_f(p_e: float, gap: float, ctx: ThermoContext) -> float:
    return delta_f(Pair(DensityMatrix.excitation(p_e), bit_hamiltonian(gap)), ctx)


def example_i_analysis(
    p0_excitation: float,
    delta_min: float,
    delta_max: float,
    ctx: ThermoContext,
    r: float = 0.0,
    grid: int = EXAMPLE_I_GRID_POINTS
) -> ExampleIReport:
    """
    Norm-bounded qubit started below its thermal excitation.

    Thermal contact: quench Delta_max -> Delta_1, thermalise, return
    isothermally; the best total over a Delta_1 grid is reported as
    tc_optimum (zero when the hypothesis holds). Gibbs-preserving route:
    the r-map raises the excitation to p*, whose matching gap Delta* lies
    in the family, after which Delta F(rho*, Delta_max) is extractable.

    Raises:
        ValidationError: On an invalid excitation, r or gap range
    """
    for value, name in ((p0_excitation, "p0"), (r, "r")):
        ok, error = validate_probability(value, name)
        if not ok:
            raise ValidationError(error)
    ok, error = validate_delta_range(delta_min, delta_max)
    if not ok:
        raise ValidationError(error)

    beta = ctx.beta
    thermal = thermal_excitation(delta_max, ctx)
    hypothesis_ok = p0_excitation <= thermal
    if not hypothesis_ok:
        logger.warning("Initial excitation exceeds the thermal excitation at delta_max",
                       p0=p0_excitation, thermal=thermal)

    gaps = np.linspace(delta_min, delta_max, grid)
    equilibrium_f = -np.logaddexp(0.0, -beta * gaps) / beta
    totals = p0_excitation * (delta_max - gaps) + equilibrium_f - equilibrium_f[-1]
    best = int(np.argmax(totals))

    p_star = bit_output_excitation(p0_excitation, delta_max, r, ctx)
    if p_star <= 0.0:
        delta_star = math.inf
    elif p_star >= 1.0:
        delta_star = -math.inf
    else:
        delta_star = math.log((1.0 - p_star) / p_star) / beta
    delta_used = min(max(delta_star, delta_min), delta_max)
    constraint_limited = not (delta_min - MEMBERSHIP_TOLERANCE <= delta_star <= delta_max + MEMBERSHIP_TOLERANCE)
    if constraint_limited:
        logger.warning("Matching gap lies outside the family; using the nearest member",
                       delta_star=delta_star, delta_used=delta_used)

    to_work = _bit_delta_f(p_star, delta_max, ctx) - _bit_delta_f(p_star, delta_used, ctx)
    return ExampleIReport(
        p0=p0_excitation,
        delta_min=delta_min,
        delta_max=delta_max,
        beta=beta,
        r=r,
        thermal_excitation=thermal,
        hypothesis_ok=hypothesis_ok,
        tc_optimum=float(totals[best]),
        tc_argmax_delta=float(gaps[best]),
        p_star=p_star,
        delta_star=delta_star,
        delta_used=delta_used,
        constraint_limited=constraint_limited,
        to_work=to_work,
    )


def example_ii_hamiltonians(t: float) -> Tuple[HermitianOperator, HermitianOperator]:
    """(V, V + t 1 (x) sigma_z) with V = sigma_z (x) sigma_z."""
    v = tensor(pauli("z"), pauli("z"))
    return v, v + t * embed(pauli("z"), 1, (2, 2))


def _example_ii_distributions(t: float, ctx: ThermoContext) -> Tuple[ClassicalDistribution, ClassicalDistribution]:
    v, target_h = example_ii_hamiltonians(t)
    q = ClassicalDistribution(np.real(np.diag(gibbs_state(target_h, ctx).state.matrix)))
    w = ClassicalDistribution(np.real(np.diag(gibbs_state(v, ctx).state.matrix)))
    return q, w


@lru_cache(maxsize=64)
def _critical_t_cached(beta: float, feasibility_tol: float) -> float:
    ctx = ThermoContext(beta)
    uniform = ClassicalDistribution.uniform(4)

    def feasible(t: float) -> bool:
        q, w = _example_ii_distributions(t, ctx)
        return thermo_majorizes(uniform, q, w, feasibility_tol)

    hi = 2.0
    while feasible(hi):
        hi *= 2.0
        if hi > 1e3:
            raise ScopeError(f"No infeasible field strength found below {hi} at beta={beta}")
    return critical_t(lambda t: _example_ii_distributions(t, ctx), uniform, 0.0, hi,
                      feasibility_tol=feasibility_tol)


def example_ii_critical_t(ctx: ThermoContext, feasibility_tol: float = FEASIBILITY_TOLERANCE) -> float:
    """Largest t for which 1/4 can be mapped to omega_{V + t 1 (x) sigma_z} (cached per beta)."""
    return _critical_t_cached(float(ctx.beta), float(feasibility_tol))


@dataclass(frozen=True)
class ExampleIIReport:
    t: float
    beta: float
    feasible: bool
    work: Optional[float]
    t_critical: float
    work_upper_bound: float

    def summary(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def example_ii_analysis(
    t: float,
    ctx: ThermoContext,
    feasibility_tol: float = FEASIBILITY_TOLERANCE
) -> ExampleIIReport:
    """
    Two qubits at (1/4, sigma_z (x) sigma_z): a Gibbs-preserving map reaches
    omega_{V + t 1 (x) sigma_z} iff t <= t_c, after which thermal contact
    extracts Delta F(omega_{V + t 1 (x) sigma_z}, V) = t tanh t - ln cosh t (beta = 1).

    Raises:
        ValidationError: If t is negative
    """
    if t < 0 or not math.isfinite(t):
        raise ValidationError(f"t must be a non-negative finite number, got {t}")
    v, target_h = example_ii_hamiltonians(t)
    q, w = _example_ii_distributions(t, ctx)
    feasible = thermo_majorizes(ClassicalDistribution.uniform(4), q, w, feasibility_tol)
    work = delta_f(Pair(gibbs_state(target_h, ctx).state, v), ctx) if feasible else None
    upper = delta_f(Pair(DensityMatrix.maximally_mixed(4), v), ctx)
    report = ExampleIIReport(
        t=t,
        beta=ctx.beta,
        feasible=feasible,
        work=work,
        t_critical=example_ii_critical_t(ctx, feasibility_tol),
        work_upper_bound=upper,
    )
    logger.debug("Example II analysed", t=t, feasible=feasible, work=work)
    return report


def example_ii_curves(t: float, ctx: ThermoContext, grid: int = 201) -> pd.DataFrame:
    """
    Lorenz curves relative to omega_V: g for 1/4, f for the target, id for omega_V itself.

    The x column joins both breakpoint sets with a uniform grid on [0, 1].
    """
    q, w = _example_ii_distributions(t, ctx)
    g_curve = thermo_lorenz_curve(ClassicalDistribution.uniform(4), w)
    f_curve = thermo_lorenz_curve(q, w)
    xs = np.union1d(np.union1d(g_curve.x, f_curve.x), np.linspace(0.0, 1.0, grid))
    return pd.DataFrame({"x": xs, "g": g_curve(xs), "f": f_curve(xs), "id": xs})


@dataclass(frozen=True)
class ExampleIIGap:
    t: float
    to_work: Optional[float]
    tc_bound: float
    gap: Optional[float]
    penalty_method: str = field(default="")

    def summary(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def example_ii_gap(t: float, ctx: ThermoContext, seed: Optional[int] = None) -> ExampleIIGap:
    """Gibbs-preserving work next to the thermal-contact cyclic bound for the same start."""
    v, _ = example_ii_hamiltonians(0.0)
    p0 = Pair(DensityMatrix.maximally_mixed(4), v)
    family = HamiltonianFamily.local(v, (2, 2))
    penalty = penalty_term(p0, family, ctx, seed=seed)
    tc_bound = cyclic_work_bound(p0, family, ctx, penalty)
    report = example_ii_analysis(t, ctx)
    gap = None if report.work is None else report.work - tc_bound
    return ExampleIIGap(t=t, to_work=report.work, tc_bound=tc_bound, gap=gap, penalty_method=penalty.method)
