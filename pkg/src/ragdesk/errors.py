"""Exception hierarchy shared across the service."""


class RagDeskError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RagDeskError):
    """Service configuration is invalid or references missing paths."""


class SourceUnavailableError(RagDeskError):
    """A source root cannot be read at all (fetch aborts for that source)."""


class UnsupportedFormatError(RagDeskError):
    """Document media type has no parser."""

    def __init__(self, media_type: str, doc_id: str = ""):
        self.media_type = media_type
        self.doc_id = doc_id
        super().__init__(f"unsupported media type {media_type!r}" + (f" for {doc_id}" if doc_id else ""))


class DocumentDecodeError(RagDeskError):
    """Document bytes could not be decoded to text."""


class IndexExistsError(RagDeskError):
    """create() was called for an index name that is already taken."""


class IndexNotFoundError(RagDeskError):
    """No persisted index with the requested name."""


class CorruptIndexError(RagDeskError):
    """Index file failed to parse; nothing was loaded."""


class IndexVersionError(RagDeskError):
    """Index file declares a format version this build does not read."""


class IndexValidationError(RagDeskError):
    """Upsert rejected: dimension mismatch, missing schema field, or bad vector."""


class GatewayError(RagDeskError):
    """Base for LLM gateway failures."""


class GatewayTimeoutError(GatewayError):
    """Provider did not answer within the configured deadline."""


class ProviderError(GatewayError):
    """Remote provider returned a non-2xx status."""

    def __init__(self, status_code: int, detail: str = ""):
        self.status_code = status_code
        super().__init__(f"provider returned status {status_code}" + (f": {detail}" if detail else ""))


class ScriptedMissError(GatewayError):
    """The stub provider had no script entry matching the request."""

    def __init__(self, purpose: str, prompt_head: str):
        self.purpose = purpose
        super().__init__(f"no scripted reply for purpose {purpose!r} (prompt starts: {prompt_head!r})")


class EmptyQueryError(RagDeskError):
    """Query contained no content to route."""


class DuplicateInteractionError(RagDeskError):
    """Attempt to rewrite an interaction_id that is already logged."""


class RefreshInFlightError(RagDeskError):
    """A refresh pass is already running; the trigger was coalesced."""

    def __init__(self, job_id: str):
        self.job_id = job_id
        super().__init__(f"refresh already in flight (job {job_id})")


class PipelineError(RagDeskError):
    """Unhandled failure inside answer(); carries the correlation id."""

    def __init__(self, correlation_id: str, cause: BaseException):
        self.correlation_id = correlation_id
        self.cause = cause
        super().__init__(f"pipeline failure (correlation_id={correlation_id}): {cause}")
