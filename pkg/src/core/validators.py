"""
Validation module for operators, states, maps and scenario parameters.
Every validator returns (is_valid, error_message) and never raises.
"""
from typing import Optional, Sequence, Tuple

import numpy as np

from src.config.logging_config import get_logger
from src.config.settings import (
    HERMITICITY_TOLERANCE,
    TRACE_TOLERANCE,
    PSD_TOLERANCE,
    UNITARY_TOLERANCE,
    DISTRIBUTION_TOLERANCE,
    STOCHASTIC_TOLERANCE
)

logger = get_logger(__name__)

def validate_square(matrix: np.ndarray) -> Tuple[bool, Optional[str]]:
    """Check that the input is a finite, non-empty square matrix."""
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False, f"Expected a square matrix, got shape {matrix.shape}"
    if matrix.shape[0] == 0:
        return False, "Matrix dimension must be positive"
    if not np.all(np.isfinite(matrix)):
        return False, "Matrix contains non-finite entries"
    return True, None

def validate_hermitian(
    matrix: np.ndarray,
    tol: float = HERMITICITY_TOLERANCE
) -> Tuple[bool, Optional[str]]:
    """
    Validate Hermiticity in max-entry norm.

    Args:
        matrix: Candidate operator
        tol: Largest accepted |A - A^dagger| entry

    Returns:
        Tuple[bool, Optional[str]]: (is_valid, error_message)
    """
    ok, error = validate_square(matrix)
    if not ok:
        return ok, error

    deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
    if deviation > tol:
        return False, f"Matrix is not Hermitian (max deviation {deviation:.3e} > {tol:.1e})"
    return True, None

def validate_density(
    matrix: np.ndarray,
    trace_tol: float = TRACE_TOLERANCE,
    psd_tol: float = PSD_TOLERANCE
) -> Tuple[bool, Optional[str]]:
    """
    Validate a density matrix: Hermitian, unit trace, positive semidefinite.

    Returns:
        Tuple[bool, Optional[str]]: (is_valid, error_message)
    """
    ok, error = validate_hermitian(matrix)
    if not ok:
        return ok, error

    trace = complex(np.trace(matrix))
    if abs(trace - 1.0) > trace_tol:
        return False, f"Trace must be 1, got {trace.real:.12g}"

    min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))[0])
    if min_eigenvalue < -psd_tol:
        return False, f"Density matrix has negative eigenvalue {min_eigenvalue:.3e}"
    return True, None

def validate_unitary(
    matrix: np.ndarray,
    tol: float = UNITARY_TOLERANCE
) -> Tuple[bool, Optional[str]]:
    """Validate U^dagger U = 1 in max-entry norm."""
    ok, error = validate_square(matrix)
    if not ok:
        return ok, error

    deviation = float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))
    if deviation > tol:
        return False, f"Matrix is not unitary (max deviation {deviation:.3e} > {tol:.1e})"
    return True, None

def validate_distribution(
    probs: np.ndarray,
    tol: float = DISTRIBUTION_TOLERANCE
) -> Tuple[bool, Optional[str]]:
    """Validate a probability vector (entries >= -1e-12, sum 1)."""
    if probs.ndim != 1 or probs.size == 0:
        return False, f"Expected a non-empty vector, got shape {probs.shape}"
    if not np.all(np.isfinite(probs)):
        return False, "Distribution contains non-finite entries"
    if np.min(probs) < -PSD_TOLERANCE:
        return False, f"Distribution has negative entry {float(np.min(probs)):.3e}"
    total = float(np.sum(probs))
    if abs(total - 1.0) > tol:
        return False, f"Distribution must sum to 1, got {total:.12g}"
    return True, None

def validate_column_stochastic(
    matrix: np.ndarray,
    tol: float = STOCHASTIC_TOLERANCE
) -> Tuple[bool, Optional[str]]:
    """Validate entries in [0, 1] and unit column sums."""
    ok, error = validate_square(matrix)
    if not ok:
        return ok, error
    if np.iscomplexobj(matrix) and np.max(np.abs(matrix.imag)) > tol:
        return False, "Stochastic matrix must be real"
    real = np.real(matrix)
    if np.min(real) < -tol or np.max(real) > 1 + tol:
        return False, "Stochastic matrix entries must lie in [0, 1]"
    deviation = float(np.max(np.abs(real.sum(axis=0) - 1.0)))
    if deviation > tol:
        return False, f"Columns must sum to 1 (max deviation {deviation:.3e})"
    return True, None

def validate_subsystem_dims(
    dims: Sequence[int],
    total_dim: Optional[int] = None
) -> Tuple[bool, Optional[str]]:
    """Validate a list of local dimensions against the full dimension."""
    if len(dims) == 0:
        return False, "At least one subsystem is required"
    if any(int(d) != d or d < 1 for d in dims):
        return False, f"Subsystem dimensions must be positive integers, got {list(dims)}"
    product = int(np.prod(dims))
    if total_dim is not None and product != total_dim:
        return False, f"Subsystem dimensions {list(dims)} do not multiply to {total_dim}"
    return True, None

def validate_probability(value: float, name: str = "probability") -> Tuple[bool, Optional[str]]:
    """Validate a scalar in [0, 1]."""
    if not np.isfinite(value):
        return False, f"{name} must be finite"
    if value < 0 or value > 1:
        return False, f"{name} must lie in [0, 1], got {value}"
    return True, None

def validate_positive(value: float, name: str) -> Tuple[bool, Optional[str]]:
    """Validate a finite strictly positive scalar."""
    if not np.isfinite(value) or value <= 0:
        return False, f"{name} must be positive, got {value}"
    return True, None

def validate_delta_range(delta_min: float, delta_max: float) -> Tuple[bool, Optional[str]]:
    """Validate a two-level norm window 0 < delta_min <= delta_max."""
    ok, error = validate_positive(delta_min, "delta_min")
    if not ok:
        return ok, error
    if not np.isfinite(delta_max) or delta_max < delta_min:
        logger.debug("Rejected gap window", delta_min=delta_min, delta_max=delta_max)
        return False, f"delta_max ({delta_max}) must be >= delta_min ({delta_min})"
    return True, None
