"""Exception hierarchy shared by every stage of the pipeline."""


class MohinrecError(Exception):
    """Base class. ``stage`` is filled in by the experiment runner."""

    exit_code = 5

    def __init__(self, message, *, stage=None):
        super().__init__(message)
        self.stage = stage

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class UsageError(MohinrecError, ValueError):
    exit_code = 2


class ShapeError(MohinrecError, ValueError):
    pass


class ValidationError(MohinrecError, ValueError):
    exit_code = 3


class ParseError(ValidationError):
    def __init__(self, message, *, line=None, source=None, stage=None):
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message, stage=stage)
        self.line = line
        self.source = source


class TrainingError(MohinrecError, RuntimeError):
    exit_code = 4

    def __init__(self, message, *, epoch=None, stage=None):
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message, stage=stage)
        self.epoch = epoch
