"""Exception hierarchy shared across the toolkit."""


class PhraseBreakError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(PhraseBreakError):
    """Input data violates a documented invariant or precondition."""


class ParseError(PhraseBreakError):
    """A file could not be parsed; carries a line number where possible."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ContractViolation(PhraseBreakError):
    """Caller broke an API contract (e.g. mismatched list lengths)."""


class AnnotationFailure(ValidationError):
    """A generated annotation failed validation against its source text.

    ``kind`` is one of the stable failure-kind tags used in validation
    reports: "TextAltered", "MisplacedMarker", "UnknownSymbol".
    """

    kind = "AnnotationFailure"

    def __init__(self, message, utterance_id=None):
        super().__init__(message)
        self.utterance_id = utterance_id


class TextAltered(AnnotationFailure):
    """Word sequence after marker removal differs from the source text."""

    kind = "TextAltered"


class MisplacedMarker(AnnotationFailure):
    """Marker before the first word, doubled markers, or a marker glued to a word."""

    kind = "MisplacedMarker"


class UnknownSymbol(AnnotationFailure):
    """A standalone token made of reserved symbols that is not a valid marker."""

    kind = "UnknownSymbol"


class BackendError(PhraseBreakError):
    """Base class for completion-backend failures."""


class AuthMissing(BackendError):
    """The configured API-key environment variable is unset."""


class ExhaustedRetries(BackendError):
    """All retry attempts failed; carries the last status code seen."""

    def __init__(self, message, last_status=None):
        super().__init__(message)
        self.last_status = last_status


class MalformedResponse(BackendError):
    """The backend answered but the body held no message text."""
