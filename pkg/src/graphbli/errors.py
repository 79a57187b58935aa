"""Exception hierarchy shared by every module."""


class GraphBLIError(Exception):
    """Base class for all package errors."""


class ShapeError(GraphBLIError, ValueError):
    """Matrix dimensions are not conformable."""


class DomainError(GraphBLIError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ValidationError(GraphBLIError, ValueError):
    """An input object violates its type invariants."""


class ParseError(GraphBLIError, ValueError):
    """A data file could not be parsed."""


class NumericalError(GraphBLIError, ArithmeticError):
    """A numerical routine failed in a way the caller asked to escalate."""


class VocabularyError(GraphBLIError, KeyError):
    """A word is missing from an embedding space."""
