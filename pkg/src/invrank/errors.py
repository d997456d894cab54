"""Exception types shared across the package."""


class InvrankError(Exception):
    pass


class SortError(InvrankError):
    """A term violates the sorting rules of its operator."""


class SortMismatch(SortError):
    """Substitution replacement sort differs from the variable's sort."""


class UnknownVariable(SortError):
    """A term references a name outside the allowed variable set."""


class ParseError(InvrankError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
        self.position = position


class MissingComponent(ParseError):
    """A required SyGuS component (pre/trans/post/synth-inv) is absent."""


class ArityMismatch(ParseError):
    """Candidate parameter count does not match the problem's variables."""


class DimensionMismatch(InvrankError):
    pass


class ZeroVector(InvrankError):
    pass


class NetworkError(InvrankError):
    pass


class AuthError(NetworkError):
    pass


class SchemaError(InvrankError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyId(InvrankError):
    pass


class EmptyFoldComplement(InvrankError):
    """No labeled training pairs exist outside the held-out fold."""


class EmbeddingUnavailable(InvrankError):
    pass


class MissingVerdict(InvrankError):
    pass


class PromptTooLong(InvrankError):
    pass
