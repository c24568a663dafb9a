"""compose-mcts exception classes.

Every error carries the process exit code the CLI reports for it.
"""


class ComposeError(Exception):
    """Base exception for compose-mcts."""

    exit_code = 1


class UsageError(ComposeError):
    """Bad flags, unknown configuration keys or refused overwrites."""

    exit_code = 1


class ConfigError(UsageError):
    """Configuration-related errors."""


class DataError(ComposeError):
    """Missing, corrupt or unwritable artifacts."""

    exit_code = 2


class DatasetError(DataError):
    """Dataset generation or loading errors."""


class ChecksumError(DataError):
    """A persisted artifact failed its integrity check."""


class NumericAbort(ComposeError):
    """A loss or parameter became non-finite."""

    exit_code = 3

    def __init__(self, step: str, detail: str = ""):
        self.step = step
        message = f"non-finite value in {step}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class GeometryError(ComposeError):
    """Invalid geometric input."""

    exit_code = 2


class ScalarOverflowError(GeometryError):
    """A Scalar numerator left the signed 64-bit range."""


class InvalidActionError(ComposeError):
    """Action id out of range or rejected by an authoritative mask."""

    exit_code = 2


class EmptyStateError(ComposeError):
    """Operation needs placed pieces or a terminal state."""

    exit_code = 2


class SearchError(ComposeError):
    """Search-related errors."""

    exit_code = 2


class DeadEndError(SearchError):
    """The root state has no legal action."""
