"""Exception types shared across the engine."""


class ValidationError(ValueError):
    """Input data violates a documented invariant or precondition."""


class InvariantError(AssertionError):
    """An internally produced object failed a post-condition check."""
