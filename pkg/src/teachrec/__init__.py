"""Peer-informed recommender for pedagogical practices.

A chatbot-style consultation collects course features, collaborative
filtering surfaces what similarly situated instructors rated highly, and an
expert rule layer refines the list and covers courses nobody has rated yet.
"""

from .bank import (
    KnowledgeBank,
    RatingRecord,
    Recommendation,
    SessionRecord,
    SnapshotFileLock,
    Suggestion,
)
from .cf import CFParams, candidate_set, cosine_similarity, similar_sessions
from .config import ServiceConfig, load_config
from .errors import TeachRecError
from .features import (
    FeatureDef,
    FeatureSchema,
    FeatureVector,
    SessionFeatures,
    encode,
    load_default_schema,
    load_schema,
    next_question,
)
from .rules import Condition, FinalSet, Rule, evaluate_rules, load_rules, refine
from .service import RecommendationCard, SessionService

__all__ = [
    "CFParams",
    "Condition",
    "FeatureDef",
    "FeatureSchema",
    "FeatureVector",
    "FinalSet",
    "KnowledgeBank",
    "RatingRecord",
    "Recommendation",
    "RecommendationCard",
    "Rule",
    "ServiceConfig",
    "SessionFeatures",
    "SessionRecord",
    "SessionService",
    "SnapshotFileLock",
    "Suggestion",
    "TeachRecError",
    "candidate_set",
    "cosine_similarity",
    "encode",
    "evaluate_rules",
    "load_config",
    "load_default_schema",
    "load_rules",
    "load_schema",
    "next_question",
    "refine",
    "similar_sessions",
]

__version__ = "0.1.0"
