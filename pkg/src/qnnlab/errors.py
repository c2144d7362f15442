"""Exception types shared by the library and mapped to CLI exit codes."""


class ResourceCapError(RuntimeError):
    """A construction would exceed a configured size cap."""

    def __init__(self, message, requested=None, cap=None):
        super().__init__(message)
        self.requested = requested
        self.cap = cap


class HypothesisViolation(ValueError):
    """Inputs violate a mathematical hypothesis the operation relies on."""
