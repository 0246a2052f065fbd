"""Exception hierarchy shared by all modules."""


class KeyChainError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(KeyChainError, ValueError):
    """An argument is outside the domain of the operation."""


class CapacityError(KeyChainError):
    """An exact computation was asked for on an instance that is too large."""


class OverlapError(KeyChainError, ValueError):
    """Two vertex sets were required to be disjoint but intersect."""


class InputError(KeyChainError, ValueError):
    """A structural input (path, embedding, ...) is not what it claims to be."""


class ParseError(KeyChainError, ValueError):
    """Malformed graph text. ``line`` is 1-based, or ``None`` for file-level problems."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleError(KeyChainError):
    """A construction stage cannot proceed on this host graph.

    ``obstruction`` is a short machine-readable tag; ``details`` carries
    whatever witness data the stage had at hand.
    """

    def __init__(self, obstruction: str, message: str, **details):
        self.obstruction = obstruction
        self.details = details
        super().__init__(message)
