"""Exception types raised across the package."""


class FactorBreakError(Exception):
    """Base class for all package-specific errors."""


class ParseError(FactorBreakError):
    """A CSV cell could not be parsed; carries 1-based row/column."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyPanelError(FactorBreakError):
    """Panel has fewer than two time points."""


class DimensionMismatchError(FactorBreakError):
    """Operands live in different ambient dimensions."""


class NotOrthonormalError(FactorBreakError):
    """Matrix columns are not orthonormal within tolerance."""


class FullSpaceError(FactorBreakError):
    """Orthogonal complement of a full-dimensional basis is empty."""


class EmptySumError(FactorBreakError):
    """A lagged moment sum has no valid terms for the requested split."""


class ConvergenceFailureError(FactorBreakError):
    """An iterative eigensolver failed to converge."""


class DegenerateSpectrumError(FactorBreakError):
    """All eigenvalues are below the numerical floor."""


class InvalidKError(FactorBreakError):
    """Requested factor count is outside 1..p-1."""


class GridEmptyError(FactorBreakError):
    """No admissible change-point candidates remain on the grid."""


class WindowTooShortError(FactorBreakError):
    """A variance window contains fewer than two observations."""


class DegenerateNormalizerError(FactorBreakError):
    """The self-normalizer vanished at a candidate split."""


class InvalidSpecError(FactorBreakError):
    """Simulation specification violates its invariants."""


class InvalidParamsError(FactorBreakError):
    """Operation parameters violate their preconditions."""
