"""Exception hierarchy shared by every module.

ValidationError covers bad inputs and degenerate data (CLI exit code 2);
plain OSError is left to propagate for I/O failures (CLI exit code 1).
"""


class WindcorrError(Exception):
    pass


class ValidationError(WindcorrError, ValueError):
    pass


class FormatError(ValidationError):
    """Malformed windpack / checkpoint header."""


class SizeMismatchError(FormatError):
    """Payload length disagrees with the header shape."""


class NonFiniteError(ValidationError):
    pass


class DegenerateDataError(ValidationError):
    """Zero variance where a spread is required."""


class ShapeError(ValidationError):
    pass


class CoordinateError(ValidationError):
    """CSV row does not map onto the grid (missing, unknown or duplicate point)."""


class TrainingDivergedError(WindcorrError):
    def __init__(self, epoch, step, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, step {step}")
        self.epoch = epoch
        self.step = step
        self.loss = loss
