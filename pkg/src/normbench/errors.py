"""Exception hierarchy shared by every stage of the benchmark."""


class NormBenchError(Exception):
    """Base class for all errors raised by this package."""


class VocabularyError(NormBenchError, ValueError):
    """An event or config references an identifier the vocabulary lacks."""


class ConfigError(NormBenchError, ValueError):
    """Malformed config, missing credential, or invalid parameter."""


class GenerationError(NormBenchError):
    """Story generation could not satisfy its size envelope."""


class ParseError(NormBenchError, ValueError):
    """A model response contained no recognizable norm blocks."""


class TransportError(NormBenchError):
    """A chat endpoint request failed after exhausting retries."""

    def __init__(self, message: str, status: int | None = None, reason: str = ""):
        super().__init__(message)
        self.status = status
        self.reason = reason


class ScoreError(NormBenchError, ValueError):
    """Ground truth and model records do not line up."""
