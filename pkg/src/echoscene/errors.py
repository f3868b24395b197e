"""Exception taxonomy shared across the package.

Every error carries a machine-readable ``code`` so the HTTP layer can map
exceptions to its wire-level error contract without isinstance ladders.
"""

from __future__ import annotations


class EchoSceneError(Exception):
    """Base class for all package errors."""

    code = "ERROR"


# --- scene graph -----------------------------------------------------------

class DuplicateName(EchoSceneError):
    code = "DUPLICATE_NAME"


class NotFound(EchoSceneError):
    code = "NOT_FOUND"


class InvalidValue(EchoSceneError):
    code = "INVALID_VALUE"


class InvalidScale(InvalidValue):
    code = "INVALID_SCALE"


class InvalidResolution(EchoSceneError):
    code = "INVALID_RESOLUTION"


# --- action DSL ------------------------------------------------------------

class CommandError(EchoSceneError):
    """Base for command-string parse failures."""

    code = "COMMAND_ERROR"

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class CommandSyntaxError(CommandError):
    code = "SYNTAX_ERROR"


class UnknownVerb(CommandError):
    code = "UNKNOWN_VERB"


class MalformedVector(CommandError):
    code = "MALFORMED_VECTOR"


class UnknownMaterial(CommandError):
    code = "UNKNOWN_MATERIAL"


class NonPositiveScale(CommandError):
    code = "NON_POSITIVE_SCALE"


class NoJsonFound(EchoSceneError):
    code = "NO_JSON_FOUND"


class SchemaError(EchoSceneError):
    code = "SCHEMA_ERROR"


class TargetMissing(EchoSceneError):
    code = "TARGET_MISSING"


# --- catalog ---------------------------------------------------------------

class EmptyText(EchoSceneError):
    code = "EMPTY_TEXT"


class UnknownCategory(EchoSceneError):
    code = "UNKNOWN_CATEGORY"


class EmptyCatalog(EchoSceneError):
    code = "EMPTY_CATALOG"


class BannedCategory(EchoSceneError):
    code = "BANNED_CATEGORY"


class LabelSchemaError(SchemaError):
    code = "LABEL_SCHEMA_ERROR"


class CategoryNotInList(EchoSceneError):
    code = "CATEGORY_NOT_IN_LIST"


class EmbedderMismatch(EchoSceneError):
    code = "EMBEDDER_MISMATCH"


# --- pipeline / providers --------------------------------------------------

class MissingSlot(EchoSceneError):
    code = "MISSING_SLOT"


class ProviderError(EchoSceneError):
    code = "PROVIDER_ERROR"


class ProviderTimeout(ProviderError):
    code = "PROVIDER_TIMEOUT"


class ProviderHttpError(ProviderError):
    code = "PROVIDER_HTTP_ERROR"


class ProviderAuthError(ProviderError):
    code = "PROVIDER_AUTH_ERROR"


class TranscriptExhausted(ProviderError):
    code = "TRANSCRIPT_EXHAUSTED"


class StageMismatch(ProviderError):
    code = "STAGE_MISMATCH"


class AssetResolutionError(EchoSceneError):
    code = "ASSET_RESOLUTION_ERROR"


# --- suggestion engine -----------------------------------------------------

class WrongState(EchoSceneError):
    code = "WRONG_STATE"


class ApplyFailed(EchoSceneError):
    code = "APPLY_FAILED"


class LogCorrupt(EchoSceneError):
    code = "LOG_CORRUPT"


class NothingToUndo(EchoSceneError):
    code = "NOTHING_TO_UNDO"
