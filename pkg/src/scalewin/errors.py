"""Exception hierarchy shared across the package.

Argument problems raise :class:`ArgumentError` (or plain ValueError from
constructors), bad input data raises :class:`DataError`, and requests that
would exceed the configured simulation budgets raise
:class:`ResourceBudgetError`.  The CLI maps these onto exit codes 1/2/3.
"""


class ScalewinError(Exception):
    """Base class for all package-specific errors."""


class ArgumentError(ScalewinError, ValueError):
    """A request was malformed (bad flag, bad combination of arguments)."""


class OutOfDomainError(ArgumentError):
    """Evaluation requested outside a tabulated shape's grid."""


class TruncationError(ScalewinError):
    """A density grid is too narrow: tail mass beyond it is not negligible."""


class ResolutionError(ArgumentError):
    """A grid is too coarse for the requested finite-difference stencil."""


class NumericError(ScalewinError):
    """A numerical procedure failed (non-positive variance, factorization)."""


class DataError(ScalewinError):
    """Input data violates its contract (bad price, empty file, no coverage)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class FormatError(DataError):
    """An input file could not be parsed at all."""


class CoverageError(DataError):
    """Day alignment retained no usable days."""


class ResourceBudgetError(ScalewinError):
    """The request exceeds the configured simulation size budget."""
