"""Exception hierarchy shared by all modules."""


class WeldRouteError(Exception):
    """Base class for every error raised by this package."""


class SizeLimitError(WeldRouteError, ValueError):
    """Requested object would exceed an index-type or memory limit."""


class ValidationError(WeldRouteError, ValueError):
    """A graph or tree violates one of its structural invariants."""


class ParseError(WeldRouteError, ValueError):
    """Malformed serialized input.

    ``lineno`` is 1-based and points at the offending line.
    """

    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class InvalidQueryError(WeldRouteError, KeyError):
    """Oracle queried with an unknown identifier or an impossible port."""

    def __str__(self) -> str:  # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class InvalidMoveError(WeldRouteError, ValueError):
    """A game strategy requested a move the rules do not allow."""


class EmbeddingError(WeldRouteError, ValueError):
    """A tree cannot be embedded from the requested vertex."""
