"""Exception types shared across the solver modules."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A configuration is structurally invalid (exponent ordering, unknown keys)."""


class ContractViolation(RuntimeError):
    """A documented precondition was violated by the caller."""


class NumericalError(RuntimeError):
    """A numerical procedure failed; carries diagnostics.

    Attributes:
        diagnostics: dict of named quantities describing the failure state.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BranchUnavailableError(NumericalError):
    """The requested ray branch does not exist (no critical points on the ray)."""


class DegenerateRayError(NumericalError):
    """The ray sits in the degeneracy band where the two critical points merge."""


class UnimodalityError(NumericalError):
    """A ray profile expected to rise once and then fall failed the shape check."""


class EnergyLevelOutOfRange(DomainError):
    """The requested energy level is outside the admissible window (0, h0)."""

    def __init__(self, message: str, h0: float):
        super().__init__(message)
        self.h0 = h0
