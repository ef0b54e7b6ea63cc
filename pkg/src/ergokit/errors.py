"""Exception types shared across the library."""


class DomainError(ValueError):
    """An input lies outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """A stated precondition (often a sampled audit) failed."""


class NumericalError(RuntimeError):
    """A computation could not be carried out stably in floating point."""


class DivergenceWarning(UserWarning):
    """A limit diverged to -inf where the theory permits it; flagged, not fatal."""
