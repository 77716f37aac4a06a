"""Exception hierarchy shared across the package."""


class PolykexError(Exception):
    """Base class for every error raised by polykex."""


class ZeroInverse(PolykexError, ZeroDivisionError):
    pass


class InvalidSubrange(PolykexError, ValueError):
    pass


class InvalidParams(PolykexError, ValueError):
    pass


class DegreeOverflow(PolykexError, ValueError):
    pass


class DimensionMismatch(PolykexError, ValueError):
    pass


class SearchLimitExceeded(PolykexError):
    def __init__(self, nodes_visited: int, limit: int):
        super().__init__(f"search visited {nodes_visited} nodes (limit {limit})")
        self.nodes_visited = nodes_visited
        self.limit = limit


class InstanceTooLarge(PolykexError, ValueError):
    pass


class OracleTooLarge(InstanceTooLarge):
    pass


class MalformedMessage(PolykexError, ValueError):
    pass


class ExhaustedRestarts(PolykexError):
    def __init__(self, attempts: int, transcripts=()):
        super().__init__(f"no unique key after {attempts} attempt(s)")
        self.attempts = attempts
        self.transcripts = list(transcripts)


class InvariantViolation(PolykexError, AssertionError):
    """A protocol guarantee was broken (e.g. Bob accepted a wrong key)."""


# wire-level rejections; every decode failure maps to exactly one of these


class WireError(PolykexError, ValueError):
    pass


class BadMagic(WireError):
    pass


class VersionUnsupported(WireError):
    pass


class UnknownMessageType(WireError):
    pass


class ParamMismatch(WireError):
    pass


class LengthMismatch(WireError):
    pass


class ElementOutOfRange(WireError):
    pass


class TruncatedFrame(WireError):
    pass


class TrailingData(WireError):
    pass


class TransportError(PolykexError, OSError):
    """The byte stream failed underneath the protocol (closed peer, socket error)."""
