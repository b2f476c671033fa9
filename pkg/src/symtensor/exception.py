"""symtensor exception hierarchy.

Every error raised by the library derives from :class:`SymTensorError`.
Precondition violations additionally derive from :class:`ValueError` so
callers that only know the builtin hierarchy can still catch them.
"""

from __future__ import annotations


class SymTensorError(Exception):
    """Base class for all symtensor errors."""


class InvalidArgError(SymTensorError, ValueError):
    """An argument violates an operation's precondition."""


class ChargeSystemMismatchError(InvalidArgError):
    """Objects from different charge systems were combined."""


class FusionRuleError(InvalidArgError):
    """A charge assignment is inconsistent with the fusion rules."""


class StructureMismatchError(InvalidArgError):
    """Spaces, directions, trees or leaf counts do not line up."""


class FuseMapError(InvalidArgError):
    """A recorded fusion is inconsistent with the leg it should split."""


class ConfigError(InvalidArgError):
    """A run configuration failed schema validation.

    Attributes:
        location: Dotted path of the first offending field, if known.
    """

    def __init__(self, message: str, location: str | None = None) -> None:
        super().__init__(message)
        self.location = location


class NonInvariantError(SymTensorError):
    """A dense tensor is not invariant within tolerance.

    Attributes:
        residual: Relative reconstruction residual that triggered the error.
    """

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class OracleSizeError(SymTensorError):
    """A dense realization would exceed the configured size guard."""


class CacheCorruptionError(SymTensorError):
    """A persisted Γ-map file could not be decoded."""


class ConvergenceError(SymTensorError):
    """An optimization produced non-finite values."""


__all__ = [
    "SymTensorError",
    "InvalidArgError",
    "ChargeSystemMismatchError",
    "FusionRuleError",
    "StructureMismatchError",
    "FuseMapError",
    "ConfigError",
    "NonInvariantError",
    "OracleSizeError",
    "CacheCorruptionError",
    "ConvergenceError",
]
