"""Exception hierarchy shared by every module."""


class TPRError(Exception):
    """Base class for all errors raised by tpreason."""


class ModeMismatchError(TPRError, ValueError):
    """Two modes that must be joined have different sizes."""


class ModeIndexError(TPRError, IndexError):
    """A mode index is outside ``0 .. order-1`` or repeated."""


class DimensionError(TPRError, ValueError):
    """The embedding dimension is too small for the requested symbols."""


class UnknownSymbolError(TPRError, KeyError):
    """A symbol name is not registered in the SymbolSpace."""


class QueryError(TPRError, ValueError):
    """A query is malformed (unbound variable, bad equality, ...)."""


class InconsistentModelError(TPRError, ValueError):
    """Direction facts cannot be satisfied by a single vector placement."""


class FixpointError(TPRError, RuntimeError):
    """Transitive closure did not settle within the iteration cap.

    The partially closed knowledge base is attached as ``kb``.
    """

    def __init__(self, message, kb=None):
        super().__init__(message)
        self.kb = kb


class ParseError(TPRError, ValueError):
    """Syntax error in a story file, annotated with its position."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", col {col}"
            where += ": "
        super().__init__(where + message)
