"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid geometry, configuration or input file."""


class NumericalError(RuntimeError):
    """A solver or numerical check failed beyond its tolerance."""
