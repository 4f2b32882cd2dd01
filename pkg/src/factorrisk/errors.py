"""Exception types shared across the package."""


class FactorRiskError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(FactorRiskError, ValueError):
    """A construction-time contract was violated (shapes, levels, weights)."""


class EmptyEventError(FactorRiskError):
    """A conditioning event carries zero probability mass."""


class NullQuantileEventError(EmptyEventError):
    """Equality conditioning refers to a factor quantile value with no mass.

    Raised instead of :class:`EmptyEventError` so callers can distinguish
    "the event is empty" from "this event type is not meaningful for the
    data" (equality conditioning on effectively continuous factors).
    """


class RankDeficientError(FactorRiskError):
    """The regression design matrix is rank deficient."""

    def __init__(self, message: str, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class DataFormatError(FactorRiskError):
    """Malformed input file; carries 1-based data-row and column coordinates."""

    def __init__(self, message: str, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
