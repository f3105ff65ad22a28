"""Exception types shared across the engine."""


class WeaveError(Exception):
    """Base class for all engine errors."""


# --- data probing -----------------------------------------------------------

class PathNotFoundError(WeaveError):
    pass


class PermissionDeniedError(WeaveError):
    pass


class TruncatedHeaderError(WeaveError):
    pass


class MalformedFieldError(WeaveError):
    pass


class ZeroRecordDurationError(WeaveError):
    pass


class WindowTooShortError(WeaveError):
    pass


class NonFiniteInputError(WeaveError):
    pass


class NyquistViolationError(WeaveError):
    pass


class InvalidBandError(WeaveError):
    pass


class NoParseableRecordingsError(WeaveError):
    pass


# --- knowledge base ---------------------------------------------------------

class CatalogNotFoundError(WeaveError):
    pass


class DuplicateCardError(WeaveError):
    pass


class UnknownCategoryError(WeaveError):
    pass


class EmptyCatalogError(WeaveError):
    pass


# --- solution tree ----------------------------------------------------------

class DuplicateIdError(WeaveError):
    pass


class UnknownParentError(WeaveError):
    pass


class SecondRootError(WeaveError):
    pass


class UnknownNodeError(WeaveError):
    pass


class NoScoredNodesError(WeaveError):
    pass


class CorruptRecordError(WeaveError):
    pass


class VersionMismatchError(WeaveError):
    pass


# --- reward -----------------------------------------------------------------

class InvalidBudgetError(WeaveError):
    pass


class MetricOutOfRangeError(WeaveError):
    pass


# --- generation -------------------------------------------------------------

class ContextInvalidError(WeaveError):
    pass


class TransportError(WeaveError):
    """Retryable transport-level failure talking to a generation backend."""


class BackendUnreachableError(WeaveError):
    """Transport kept failing after all retries."""


class GenerationEmptyError(WeaveError):
    """A code-producing role returned no code block."""


# --- sandbox ----------------------------------------------------------------

class SpawnFailureError(WeaveError):
    pass


class MetricsFileMissingError(WeaveError):
    pass


class MalformedMetricsError(WeaveError):
    pass


# --- orchestration ----------------------------------------------------------

class NoExpandableNodesError(WeaveError):
    pass


class NodeUnscoredError(WeaveError):
    pass


class ProbeFailedError(WeaveError):
    pass


class RootGenerationFailedError(WeaveError):
    pass
