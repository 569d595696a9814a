"""Exception hierarchy shared by the solver modules."""


class GkbError(Exception):
    """Base class for all errors raised by :mod:`gkbrelax`."""


class DimensionError(GkbError, ValueError):
    """Operands have incompatible shapes."""


class SPDError(GkbError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class SymmetryError(SPDError):
    """A matrix expected to be symmetric is not (within tolerance)."""


class NumericalBreakdown(GkbError, ArithmeticError):
    """NaN/Inf appeared in an iterate, or a normalization constant vanished."""


class TrivialRhsError(GkbError):
    """The right-hand side is zero, so the solution is zero."""


class CapacityError(GkbError):
    """A dense operation was requested above the configured size cap."""


class MatrixMarketError(GkbError, ValueError):
    """Malformed Matrix Market input."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
