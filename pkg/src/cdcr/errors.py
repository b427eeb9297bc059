"""Exception hierarchy.

Config problems map to CLI exit code 1, data problems to exit code 2.
"""


class CdcrError(Exception):
    exit_code = 2


class ConfigError(CdcrError, ValueError):
    exit_code = 1


class DataError(CdcrError):
    exit_code = 2


class IngestError(DataError):
    pass


class ParseError(DataError, ValueError):
    pass


class EncodingError(DataError, ValueError):
    """Raised when a string cannot be phonetically encoded."""


class DomainError(DataError, ValueError):
    """Input outside the domain of a similarity function."""


class ScoringError(DataError):
    pass


class EvaluationError(DataError):
    pass


class CorruptionError(DataError):
    def __init__(self, segment, detail="checksum mismatch"):
        super().__init__(f"store segment {segment!r} is corrupt: {detail}")
        self.segment = segment


class NotFoundError(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class StageError(CdcrError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
