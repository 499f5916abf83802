"""Error hierarchy shared by every layer.

Models, services and DAOs raise ``QNNError`` subclasses. Controllers turn
them into ``CommandError`` carrying the process exit code.
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_DIVERGED = 3


class QNNError(Exception):
    pass


class InvalidArgumentError(QNNError, ValueError):
    pass


class InvalidStateError(QNNError, ValueError):
    """A matrix or vector violates the density-matrix / state invariants."""


class DegenerateStateError(InvalidStateError):
    pass


class InsufficientDataError(QNNError, ValueError):
    pass


class TrainingDivergedError(QNNError):

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class CommandError(Exception):

    def __init__(self, exit_code: int, detail: str):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail
