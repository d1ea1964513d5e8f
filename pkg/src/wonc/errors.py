"""Exception types shared across the package."""


class NumericalFailure(ArithmeticError):
    """An iterative routine did not converge."""


class PreconditionError(ValueError):
    """Inputs are valid values but violate a stated precondition."""


class ResourceLimitError(ValueError):
    """A request exceeds a hard size limit (e.g. exhaustive enumeration)."""
