"""Exception hierarchy for the estimation pipeline.

Every error carries the process exit code the CLI reports for it. The root
class does not derive from ``ValueError``; pydantic validators pass these
errors through unchanged.
"""


class LCMError(Exception):
    """Base class for all latent class model errors."""

    exit_code = 1


class UsageError(LCMError):
    """Command-line misuse."""

    exit_code = 2


class DataValidationError(LCMError):
    """Input data or parameters violate a type invariant."""

    exit_code = 3


class NonBinaryEntry(DataValidationError):
    """A response entry is neither 0 nor 1."""

    def __init__(self, row: int, col: int, value: object = None):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"Non-binary entry {value!r} at row {row}, column {col}")


class TooFewItems(DataValidationError):
    """Fewer than three items; the moment method needs three views."""

    def __init__(self, n_items: int):
        self.n_items = n_items
        super().__init__(f"Response matrix has J={n_items} items; J >= 3 is required")


class TooFewItemsForViews(DataValidationError):
    """A view cannot hold at least L items."""


class DimensionMismatch(DataValidationError):
    """Array shapes do not agree."""


class NotUnitVector(DataValidationError):
    """A vector that must have unit norm does not."""


class InvalidProbabilities(DataValidationError):
    """Probabilities outside their admissible range or not summing to one."""


class DomainError(DataValidationError):
    """Argument outside the domain of a formula."""


class NumericalError(LCMError):
    """Numerical failure of the spectral pipeline."""

    exit_code = 4


class RankCollapse(NumericalError):
    """Fewer than L singular values survive the truncation floor."""


class RankDeficientView(NumericalError):
    """A view's item-parameter block does not have full column rank."""


class InsufficientRank(NumericalError):
    """The second moment has fewer than L usable positive eigenvalues."""


class ZeroIterate(NumericalError):
    """A power iterate vanished; the tensor is degenerate."""
