"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class NumericError(ArithmeticError):
    """A value that must be finite is NaN or infinite."""


class StateError(RuntimeError):
    """An operation was called in an invalid order (e.g. double backward)."""


class ParseError(ValueError):
    """Malformed CoNLL-U input; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StructureError(ValueError):
    """A dependency parse does not form a valid tree."""


class VocabError(ValueError):
    """A token id falls outside the embedding vocabulary."""


class CoverageError(ValueError):
    """A relation tensor does not cover every ordered node pair."""


class ConfigError(ValueError):
    """Configuration and loaded parameters disagree."""
