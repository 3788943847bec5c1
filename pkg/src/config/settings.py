"""
Configuration settings for the thermoctl work-extraction toolkit.

This module contains all configurable values used across the library and
the command-line harness: default inverse temperature, numerical
tolerances, search budgets and report formatting. Values can be overridden
via environment variables (or a local .env file).
"""

import os
from pathlib import Path
from typing import Final, Optional

from dotenv import load_dotenv

# Load environment variables from .env file when one is present
env_path = Path('.env')
if env_path.exists():
    load_dotenv(dotenv_path=env_path)

# Thermodynamic Defaults
DEFAULT_BETA: float = float(os.getenv("THERMOCTL_BETA", "1.0"))
DEFAULT_N_STEPS: int = int(os.getenv("THERMOCTL_N_STEPS", "10000"))
DEFAULT_SEED: int = int(os.getenv("THERMOCTL_SEED", "0"))

# System Configuration
LOG_LEVEL: str = os.getenv("THERMOCTL_LOG_LEVEL", "WARNING")
LOG_PATH: Optional[Path] = Path(os.environ["THERMOCTL_LOG_PATH"]) if os.getenv("THERMOCTL_LOG_PATH") else None
LOG_ROTATION_SIZE_MB: int = int(os.getenv("THERMOCTL_LOG_ROTATION_SIZE_MB", "10"))
LOG_BACKUP_COUNT: int = int(os.getenv("THERMOCTL_LOG_BACKUP_COUNT", "3"))

# Validation Tolerances
# ---------------------
# Max-entry deviations accepted when constructing operators and states.

HERMITICITY_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_HERMITICITY_TOLERANCE', '1e-12'))
TRACE_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_TRACE_TOLERANCE', '1e-12'))
PSD_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_PSD_TOLERANCE', '1e-12'))
UNITARY_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_UNITARY_TOLERANCE', '1e-12'))
SUPPORT_THRESHOLD: Final[float] = float(os.getenv('THERMOCTL_SUPPORT_THRESHOLD', '1e-12'))
DISTRIBUTION_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_DISTRIBUTION_TOLERANCE', '1e-10'))
STOCHASTIC_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_STOCHASTIC_TOLERANCE', '1e-12'))
FIXED_POINT_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_FIXED_POINT_TOLERANCE', '1e-10'))
DIAGONAL_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_DIAGONAL_TOLERANCE', '1e-10'))
MEMBERSHIP_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_MEMBERSHIP_TOLERANCE', '1e-10'))

# Feasibility and Search Settings
# -------------------------------
# Curve comparison slack, bisection/golden-section targets and budgets.

FEASIBILITY_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_FEASIBILITY_TOLERANCE', '1e-9'))
BISECTION_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_BISECTION_TOLERANCE', '1e-8'))
GOLDEN_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_GOLDEN_TOLERANCE', '1e-8'))
BRACKET_GRID_POINTS: Final[int] = int(os.getenv('THERMOCTL_BRACKET_GRID_POINTS', '1000'))
EXAMPLE_I_GRID_POINTS: Final[int] = int(os.getenv('THERMOCTL_EXAMPLE_I_GRID_POINTS', '10000'))
MULTI_STARTS: Final[int] = int(os.getenv('THERMOCTL_MULTI_STARTS', '16'))
LOCAL_FIELD_BOUND: Final[float] = float(os.getenv('THERMOCTL_LOCAL_FIELD_BOUND', '2.0'))
ORBIT_SAMPLES: Final[int] = int(os.getenv('THERMOCTL_ORBIT_SAMPLES', '32'))
PASSIVITY_TOLERANCE: Final[float] = float(os.getenv('THERMOCTL_PASSIVITY_TOLERANCE', '1e-6'))

# Smallest population kept when inverting a state into a Hamiltonian;
# sets the largest level spacing used for "Gibbs state of rho" targets.
POPULATION_FLOOR: Final[float] = float(os.getenv('THERMOCTL_POPULATION_FLOOR', '1e-15'))

# Report Settings
# ---------------

REPORT_SIGNIFICANT_DIGITS: Final[int] = int(os.getenv('THERMOCTL_REPORT_SIGNIFICANT_DIGITS', '12'))
REPORT_SCHEMA_VERSION: Final[str] = "1.0"
PROTOCOL_SCHEMA_VERSION: Final[str] = "1.0"
SWEEP_WORKERS: Final[int] = int(os.getenv('THERMOCTL_SWEEP_WORKERS', '4'))


def validate_config() -> Optional[str]:
    """
    Validate the configuration settings.

    Returns:
        Optional[str]: Error message if validation fails, None if successful
    """
    if DEFAULT_BETA <= 0:
        return "THERMOCTL_BETA must be greater than 0"

    if DEFAULT_N_STEPS <= 0:
        return "THERMOCTL_N_STEPS must be greater than 0"

    if DEFAULT_SEED < 0:
        return "THERMOCTL_SEED must be non-negative"

    if MULTI_STARTS <= 0:
        return "THERMOCTL_MULTI_STARTS must be greater than 0"

    if LOCAL_FIELD_BOUND <= 0:
        return "THERMOCTL_LOCAL_FIELD_BOUND must be greater than 0"

    if LOG_PATH is not None:
        LOG_PATH.parent.mkdir(parents=True, exist_ok=True)

    return None


def validate_settings():
    """Validate that all settings are within acceptable ranges."""
    for name, value in (
        ("Hermiticity", HERMITICITY_TOLERANCE),
        ("Trace", TRACE_TOLERANCE),
        ("PSD", PSD_TOLERANCE),
        ("Unitary", UNITARY_TOLERANCE),
        ("Fixed point", FIXED_POINT_TOLERANCE),
    ):
        assert 0 < value < 1e-6, f"{name} tolerance must be between 0 and 1e-6"

    assert 0 <= FEASIBILITY_TOLERANCE < 1e-3, "Feasibility tolerance must be below 1e-3"
    assert 0 < BISECTION_TOLERANCE < 1e-3, "Bisection tolerance must be below 1e-3"
    assert 0 < GOLDEN_TOLERANCE < 1e-3, "Golden-section tolerance must be below 1e-3"
    assert BRACKET_GRID_POINTS >= 3, "Bracketing grid needs at least 3 points"
    assert EXAMPLE_I_GRID_POINTS >= 3, "Example I grid needs at least 3 points"
    assert 0 < POPULATION_FLOOR < 1e-6, "Population floor must be between 0 and 1e-6"
    assert 6 <= REPORT_SIGNIFICANT_DIGITS <= 17, "Report digits must be between 6 and 17"
    assert SWEEP_WORKERS >= 1, "Sweep worker count must be positive"


# Validate settings on module import
validate_settings()
