"""Exception hierarchy.  The CLI maps each family to an exit code."""

from __future__ import annotations


class SeraphError(Exception):
    pass


class QueryError(SeraphError):
    """Problems with query text or its meaning."""


class SeraphSyntaxError(QueryError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class UnsupportedFeatureError(SeraphSyntaxError):
    """A construct outside the supported Cypher subset."""

    def __init__(self, feature: str, line: int, column: int):
        super().__init__(f"unsupported feature: {feature}", line, column)
        self.feature = feature


class SemanticError(QueryError):
    """Well-formed text whose meaning is invalid, such as an unbound variable.

    ``subject`` names the offending identifier; the parser uses it to fill in
    ``line`` and ``column``.
    """

    def __init__(self, message: str, subject: str | None = None, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}" if line else message)
        self.message = message
        self.subject = subject
        self.line = line
        self.column = column


class EvaluationError(QueryError):
    pass


class DataError(SeraphError, ValueError):
    """Malformed or inconsistent stream data."""


class GraphError(DataError):
    pass


class JsonPgError(DataError):
    pass


class EnvelopeError(DataError):
    pass


class OutOfOrderError(DataError):
    def __init__(self, previous: int, current: int):
        super().__init__(f"event at {current} arrived after event at {previous}")
        self.previous = previous
        self.current = current


class SchemaError(SeraphError, ValueError):
    """Tables with different field sets were combined."""


class ConstructError(SeraphError):
    pass


class SourceError(SeraphError, OSError):
    """A source or sink could not be opened or used."""


class LifecycleError(SeraphError):
    pass
