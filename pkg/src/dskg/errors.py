"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """A hypothesis required by a checker or solver is not satisfied."""


class NumericError(ArithmeticError):
    """A numerical procedure failed to reach its target accuracy.

    ``estimate`` carries the best value obtained and ``error`` the last error
    bound (or partial-sum term) so callers can decide what to do with it.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
