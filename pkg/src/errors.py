"""
src/errors.py
════════════════════════════════════════════════════════════════════════════
Exception hierarchy for *ipd-inference*.

Every error raised on purpose by the library derives from :class:`IpdError`,
which is itself a ``RuntimeError`` so callers that only know "the pipeline
failed" can keep catching that.  Each family carries the exit code the CLI
returns for it:

    2  usage / configuration      (bad tags, unsupported combinations)
    3  data                       (formula, schema, parse, validation)
    4  numerical                  (singular systems, non-convergence …)
"""

from __future__ import annotations

from typing import Any


class IpdError(RuntimeError):
    """Base class for all library errors."""

    exit_code: int = 1

    def to_dict(self) -> dict[str, Any]:
        """Structured form used by the CLI and the HTTP façade."""
        return {"type": type(self).__name__, "message": str(self)}


# ──────────────────────────────────────────────────────────────────────────
# Usage / configuration
# ──────────────────────────────────────────────────────────────────────────
class ConfigurationError(IpdError):
    exit_code = 2


class UnsupportedCombinationError(ConfigurationError):
    """A (method, estimand) pair outside the support matrix."""


class UnsupportedOperationError(ConfigurationError):
    """An operation that has no meaning for the fit at hand (e.g. augment on a mean)."""


# ──────────────────────────────────────────────────────────────────────────
# Data
# ──────────────────────────────────────────────────────────────────────────
class DataError(IpdError):
    exit_code = 3


class FormulaParseError(DataError):
    pass


class SchemaError(DataError):
    def __init__(self, missing: list[str]) -> None:
        self.missing = list(missing)
        super().__init__(
            "dataset: missing required column(s): " + ", ".join(self.missing)
        )


class DataParseError(DataError):
    def __init__(self, message: str, row: int | None = None) -> None:
        self.row = row
        super().__init__(message)


class DataValidationError(DataError):
    def __init__(self, message: str, row: int | None = None) -> None:
        self.row = row
        super().__init__(message)


# ──────────────────────────────────────────────────────────────────────────
# Numerical
# ──────────────────────────────────────────────────────────────────────────
class NumericalError(IpdError):
    exit_code = 4


class SingularityError(NumericalError):
    pass


class NonConvergenceError(NumericalError):
    def __init__(self, message: str, last: Any = None, residual: float | None = None) -> None:
        self.last = last
        self.residual = residual
        super().__init__(message)


class SeparationError(NumericalError):
    pass


class DegeneratePredictionsError(NumericalError):
    pass


class ReplicateFailureError(NumericalError):
    """Too many bootstrap or study replicates failed."""
