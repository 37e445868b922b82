"""Exception types shared across the pipeline."""


class ReventError(Exception):
    """Base class for all errors raised by this package."""


class CorpusFormatError(ReventError):
    """A corpus or prediction file could not be parsed (carries the line number)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SpanValidationError(ReventError):
    """A span's surface string does not match the document text slice."""


class UnknownDocumentError(ReventError):
    """A prediction references a doc_id that is not in the corpus."""


class ReplyParseError(ReventError):
    """A model reply could not be parsed; carries the raw text for retries/audit."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class BackendError(ReventError):
    """Transport-level failure talking to a chat backend."""


class OrchestrationError(ReventError):
    """An agent or reflection call failed after bounded retries."""


class ConfigurationError(ReventError):
    """Invalid or incomplete run configuration."""


class IntegrationError(ReventError):
    """Internal consistency violation while merging prediction sets."""


class ContractError(ReventError):
    """An operation was invoked with a target that violates its contract."""
