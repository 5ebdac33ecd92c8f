"""Domain error hierarchy. Every error carries a stable machine-readable code
that the HTTP facade and CLI surface verbatim."""


class EpssError(Exception):
    """Base class; `code` is the wire-level identifier for the error class."""

    code = "Error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# tag / entity registry
class DuplicateTag(EpssError):
    code = "DuplicateTag"


class UnknownTag(EpssError):
    code = "UnknownTag"


class UnknownEntity(EpssError):
    code = "UnknownEntity"


class CapacityExceeded(EpssError):
    code = "CapacityExceeded"


class InvalidPayload(EpssError):
    code = "InvalidPayload"


# knowledge repository
class DuplicateLocator(EpssError):
    code = "DuplicateLocator"


class EmptyManifest(EpssError):
    code = "EmptyManifest"


class ConflictingSuggestions(EpssError):
    code = "ConflictingSuggestions"


class DanglingFragment(EpssError):
    code = "DanglingFragment"


class SchemaViolation(EpssError):
    code = "SchemaViolation"


class UnknownUnit(EpssError):
    code = "UnknownUnit"


# workflow
class MalformedProcedure(EpssError):
    code = "MalformedProcedure"


class UnknownProcedure(EpssError):
    code = "UnknownProcedure"


class InsufficientAccreditation(EpssError):
    code = "InsufficientAccreditation"


class ModelMismatch(EpssError):
    code = "ModelMismatch"


class SessionClosed(EpssError):
    code = "SessionClosed"


class UnknownSession(EpssError):
    code = "UnknownSession"


class UnknownStep(EpssError):
    code = "UnknownStep"


class UnknownActor(EpssError):
    code = "UnknownActor"


# delivery
class EntityNotAppliance(EpssError):
    code = "EntityNotAppliance"


class NoActiveSession(EpssError):
    code = "NoActiveSession"


class UnknownDevice(EpssError):
    code = "UnknownDevice"


class LinkViolation(EpssError):
    code = "LinkViolation"


class ApplianceMismatch(EpssError):
    code = "ApplianceMismatch"


# collaboration
class AlreadyClaimed(EpssError):
    code = "AlreadyClaimed"


class RequestClosed(EpssError):
    code = "RequestClosed"


class DanglingReference(EpssError):
    code = "DanglingReference"


class UnknownRequest(EpssError):
    code = "UnknownRequest"


# scenario harness
class ScriptError(EpssError):
    code = "ScriptError"
