"""Exception types shared across the toolkit."""


class SafestreetsError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(SafestreetsError):
    """Malformed or out-of-domain input data."""


class ScoringError(SafestreetsError):
    """A scorer failed, timed out, or replied with garbage."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ProtocolError(SafestreetsError):
    """A scorer process violated the scorer/1 wire protocol."""
