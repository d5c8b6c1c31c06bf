"""Exception types for the extractor."""


class ExtractError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ExtractError):
    """Bad inputs: unknown model, unreadable checkpoint, malformed records."""
