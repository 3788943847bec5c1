"""
Exception hierarchy for thermoctl.
Each error carries the process exit code the CLI reports for it.
"""


class ThermoError(Exception):
    """Base class for all library errors."""
    exit_code: int = 1


class ValidationError(ThermoError, ValueError):
    """Input failed a numerical validation (Hermiticity, trace, unitarity, ...)."""
    exit_code = 4


class ConfigError(ThermoError, ValueError):
    """Scenario configuration is malformed or out of range."""
    exit_code = 2


class ScopeError(ThermoError):
    """Request lies outside what the library models (e.g. coherent input to a classical map)."""
    exit_code = 3


class UnsupportedFamilyError(ScopeError):
    """No penalty evaluation exists for this family / orbit / state combination."""


class ConstraintError(ScopeError):
    """A protocol step leaves the allowed Hamiltonian family."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class SearchError(ThermoError):
    """A bracketed search was started on an invalid bracket."""
    exit_code = 4


class NumericalError(ThermoError):
    """An internal consistency check failed."""
    exit_code = 4
