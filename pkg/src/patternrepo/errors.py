"""Error types shared by the model, store, graph, API, and CLI layers.

Every error carries a stable machine-readable ``code`` that the HTTP layer
maps onto a status and echoes in the response body, so clients never see a
generic failure where a precise one exists.
"""

from __future__ import annotations


class RepositoryError(Exception):
    """Base class for all domain errors."""

    code = "RepositoryError"

    def __init__(self, message: str, subject: str | None = None):
        super().__init__(message)
        self.message = message
        self.subject = subject


class DuplicateIdError(RepositoryError):
    code = "DuplicateId"


class InvalidSchemaError(RepositoryError):
    code = "InvalidSchema"


class UnknownEntityError(RepositoryError):
    code = "UnknownEntity"


class UnknownLanguageError(UnknownEntityError):
    code = "UnknownLanguage"


class NotFoundError(RepositoryError):
    code = "NotFound"


class SchemaViolationError(RepositoryError):
    code = "SchemaViolation"


class ForeignSourceError(RepositoryError):
    code = "ForeignSource"


class UnknownRelationTypeError(RepositoryError):
    code = "UnknownRelationType"


class SelfLoopError(RepositoryError):
    code = "SelfLoop"


class DuplicateRelationError(RepositoryError):
    code = "DuplicateRelation"


class EmptyContextError(RepositoryError):
    code = "EmptyContext"


class AlreadyMemberError(RepositoryError):
    code = "AlreadyMember"


class NotLanguageOwnedError(RepositoryError):
    code = "NotLanguageOwned"


class EndpointNotInViewError(RepositoryError):
    code = "EndpointNotInView"


class WouldOrphanRelationsError(RepositoryError):
    code = "WouldOrphanRelations"


class VersionConflictError(RepositoryError):
    code = "VersionConflict"


class IntegrityViolationError(RepositoryError):
    code = "IntegrityViolation"


class UnsupportedFormatVersionError(RepositoryError):
    code = "UnsupportedFormatVersion"


class NonEmptyStoreError(RepositoryError):
    code = "NonEmptyStore"


class NegativeDepthError(RepositoryError):
    code = "NegativeDepth"


class UnsupportedFormatError(RepositoryError):
    code = "UnsupportedFormat"


class MalformedBodyError(RepositoryError):
    code = "MalformedBody"


class MissingPreconditionError(RepositoryError):
    code = "MissingPrecondition"
