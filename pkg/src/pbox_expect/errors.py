"""Exception hierarchy. Every engine error derives from PBoxError."""


class PBoxError(Exception):
    pass


class MalformedSpecError(PBoxError):
    pass


class ExpressionError(MalformedSpecError):
    """Parse or evaluation failure, with the byte offset of the problem."""

    def __init__(self, message: str, offset: int = -1):
        self.offset = offset
        if offset >= 0:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class DomainError(PBoxError, ValueError):
    pass


class BracketError(PBoxError):
    pass


class ShapeDetectionError(PBoxError):
    pass


class InconsistentRandomSet(PBoxError):
    pass


class ConsistencyError(PBoxError):
    """An assembled extremizing distribution violated its invariants."""


class ConfigurationError(PBoxError):
    pass


class LpStatusError(PBoxError):
    pass


class EventError(PBoxError):
    pass
