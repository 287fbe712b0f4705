"""Exception types shared across the toolkit."""


class InvalidInputError(ValueError):
    """Caller passed data that violates an operation's preconditions."""


class NumericalError(RuntimeError):
    """A numerically required property failed beyond roundoff tolerance."""
