"""Exception hierarchy shared by every rcflab module."""


class RcfError(Exception):
    """Base class for all library errors (the CLI maps these to exit code 1)."""


class DomainError(RcfError, ValueError):
    """Input outside the mathematical domain of an operation."""


class AmbientMismatchError(DomainError):
    """Operands live over different prime fields."""


class ShapeError(DomainError):
    """Matrix dimensions are incompatible with the operation."""


class SingularityError(DomainError):
    """Polynomial matrix has vanishing determinant (infinite cokernel)."""


class ResourceGuardError(RcfError):
    """A configured work bound would be exceeded."""


class ConsistencyError(RcfError, AssertionError):
    """Two computation paths that must agree did not; indicates a bug."""


class DistributionError(DomainError):
    """An entry distribution violates the epsilon-balanced contract."""
