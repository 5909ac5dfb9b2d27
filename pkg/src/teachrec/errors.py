"""Error taxonomy shared across the engine, the HTTP surface, and the admin CLI.

Every exception carries a stable ``code`` string; the HTTP layer serializes
errors as ``{"error_code": code, "message": ...}`` and the CLI reuses the same
codes for ``--json`` output.
"""

from __future__ import annotations


class TeachRecError(Exception):
    """Base class for all domain errors."""

    code = "InternalError"
    http_status = 400

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# --- feature model ---------------------------------------------------------

class MalformedSchema(TeachRecError):
    code = "MalformedSchema"


class UnknownFeature(TeachRecError):
    code = "UnknownFeature"
    http_status = 404


class ValueOutOfRange(TeachRecError):
    code = "ValueOutOfRange"


class NotInVocabulary(TeachRecError):
    code = "NotInVocabulary"


class TypeMismatch(TeachRecError):
    code = "TypeMismatch"


class IncompleteFeatures(TeachRecError):
    code = "IncompleteFeatures"


class SchemaVersionMismatch(TeachRecError):
    code = "SchemaVersionMismatch"


# --- knowledge bank --------------------------------------------------------

class DuplicateId(TeachRecError):
    code = "DuplicateId"
    http_status = 409


class InvalidInteractionMode(TeachRecError):
    code = "InvalidInteractionMode"


class UnknownRecommendation(TeachRecError):
    code = "UnknownRecommendation"
    http_status = 404


class ScoreOutOfRange(TeachRecError):
    code = "ScoreOutOfRange"


class EmptySuggestion(TeachRecError):
    code = "EmptySuggestion"


class UnknownSuggestion(TeachRecError):
    code = "UnknownSuggestion"
    http_status = 404


class AlreadyResolved(TeachRecError):
    code = "AlreadyResolved"
    http_status = 409


class CorruptSnapshot(TeachRecError):
    code = "CorruptSnapshot"


class SnapshotLocked(TeachRecError):
    code = "SnapshotLocked"
    http_status = 409


# --- collaborative filter --------------------------------------------------

class DimensionMismatch(TeachRecError):
    code = "DimensionMismatch"


# --- expert system ---------------------------------------------------------

class MalformedRules(TeachRecError):
    code = "MalformedRules"


class UnknownFeatureInRule(TeachRecError):
    code = "UnknownFeatureInRule"


class OperatorKindMismatch(TeachRecError):
    code = "OperatorKindMismatch"


class DuplicateRuleId(TeachRecError):
    code = "DuplicateRuleId"
    http_status = 409


# --- session service -------------------------------------------------------

class UnknownSession(TeachRecError):
    code = "UnknownSession"
    http_status = 404


class WrongQuestion(TeachRecError):
    code = "WrongQuestion"
    http_status = 409


class NotReady(TeachRecError):
    code = "NotReady"
    http_status = 409


class NotPresented(TeachRecError):
    code = "NotPresented"
    http_status = 409


class ServiceNotSeeded(TeachRecError):
    code = "ServiceNotSeeded"
    http_status = 409


class MalformedRequest(TeachRecError):
    code = "MalformedRequest"


# --- admin CLI -------------------------------------------------------------

class MalformedCorpus(TeachRecError):
    code = "MalformedCorpus"
