"""Exception types shared across the toolkit."""


class XLDetectError(Exception):
    """Base class for all toolkit errors."""


class FormatError(XLDetectError):
    """A file or record does not match its declared format."""


class LabelingError(XLDetectError):
    """An account cannot be labeled (e.g. no status on record)."""


class TrainingError(XLDetectError):
    """Training failed or diverged."""


class AlignmentError(XLDetectError):
    """Embedding alignment failed (degenerate input, empty induction, ...)."""


class DependencyError(XLDetectError):
    """A pipeline stage was invoked before its input artifacts exist."""


class ConfigError(XLDetectError):
    """Configuration validation failed; carries the full violation list."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
