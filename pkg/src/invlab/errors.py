"""Exception types shared across the package."""


class UsageError(ValueError):
    """Bad input to a public entry point (unknown id, wrong rank, bad config)."""


class PreconditionError(ValueError):
    """An operation was called on a value outside its domain."""
