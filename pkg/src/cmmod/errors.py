"""Shared exception types."""


class ResourceLimitError(Exception):
    """A configured resource bound (level, arity, discriminant, precision) was exceeded."""


class StructureDomainError(ValueError):
    """A constant is not interpretable in the chosen structure."""


class ParseError(ValueError):
    """Syntax error in a formula or constant literal, with position info."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
