"""Exception hierarchy shared across the benchmark."""


class BenchError(Exception):
    """Base class for all benchmark errors."""


class ParameterError(BenchError, ValueError):
    """A scalar argument violates its precondition."""


class ShapeError(BenchError, ValueError):
    """Array shapes are inconsistent with the declared contract."""


class VocabularyError(BenchError, KeyError):
    """A token is unknown to (or collides with) the vocabulary."""


class ConfigError(BenchError, ValueError):
    """A configuration object is internally inconsistent."""


class TriggerError(BenchError, ValueError):
    """A trigger is applied in the wrong input space or cannot apply."""


class AlignmentError(BenchError, ValueError):
    """A text target transform cannot align with the given prompt."""


class TrainingDivergedError(BenchError, RuntimeError):
    """Training reached a non-finite loss.

    Attributes:
        step: index of the optimization step at which the loss left the
            finite range.
    """

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class InversionFailedError(BenchError, RuntimeError):
    """Trigger inversion diverged; carries the objective history."""

    def __init__(self, message: str, history):
        super().__init__(message)
        self.history = list(history)


class RemovalFailedError(BenchError, RuntimeError):
    """Backdoor removal fine-tuning diverged."""


class ComparabilityError(BenchError, ValueError):
    """Two statistics were produced by different feature extractors."""


class RecordError(BenchError, ValueError):
    """A run record is missing required fields."""


class TemplateError(BenchError, ValueError):
    """A judge prompt template is missing required backdoor info keys."""

    def __init__(self, message: str, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)


class ParseError(BenchError, ValueError):
    """A judge response could not be parsed; carries the raw text."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class LookupErrorJudge(BenchError, KeyError):
    """An image is not present in the oracle scene database."""


class IngestionError(BenchError, ValueError):
    """A binary dataset file is malformed; carries the byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class GroupingError(BenchError, ValueError):
    """Records with mixed target types were grouped into one table."""
