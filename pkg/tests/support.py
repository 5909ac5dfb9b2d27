"""Shared test fixtures-in-code: schemas, bank builders, and independent oracles.

The oracles here deliberately avoid the production code paths: cosine is
recomputed with 50-digit Decimal arithmetic and candidate scores with exact
Fractions, so the tests check the implementation against independent math
rather than against itself.
"""

from __future__ import annotations

from decimal import Decimal, getcontext
from fractions import Fraction
from typing import Iterable, Sequence

from teachrec.bank import KnowledgeBank, RatingRecord, Recommendation, SessionRecord
from teachrec.features import FeatureVector, parse_schema

SMALL_SCHEMA_DOC = {
    "version": "test-v1",
    "features": [
        {
            "id": "subject",
            "prompt": "Which subject?",
            "kind": "categorical",
            "values": ["math", "writing"],
        },
        {
            "id": "cohort",
            "prompt": "How many students?",
            "kind": "numeric",
            "min": 0,
            "max": 10,
        },
        {"id": "has_lab", "prompt": "Lab sessions?", "kind": "boolean"},
    ],
}

# answers that encode to (1, 0, 0.5, 1.0) under SMALL_SCHEMA_DOC
SMALL_PROFILE = {"subject": "math", "cohort": 5, "has_lab": True}

BRANCHING_SCHEMA_DOC = {
    "version": "branch-v1",
    "features": [
        {
            "id": "format",
            "prompt": "Course format?",
            "kind": "categorical",
            "values": ["lecture", "lab", "seminar"],
        },
        {
            "id": "lab_hours",
            "prompt": "Weekly lab hours?",
            "kind": "numeric",
            "min": 0,
            "max": 40,
            "skip_condition": {"feature": "format", "op": "ne", "value": "lab"},
        },
        {
            "id": "team_taught",
            "prompt": "Team taught?",
            "kind": "boolean",
            "required": False,
        },
    ],
}


def small_schema():
    return parse_schema(SMALL_SCHEMA_DOC, source="<test>")


def branching_schema():
    return parse_schema(BRANCHING_SCHEMA_DOC, source="<test>")


def make_rec(rec_id: str, mode: str = "learner-content", **overrides) -> Recommendation:
    fields = {
        "rec_id": rec_id,
        "title": f"Practice {rec_id}",
        "body": f"Long-form advice for {rec_id}.",
        "interaction_mode": mode,
        "created_at": "2026-01-01T00:00:00+00:00",
    }
    fields.update(overrides)
    return Recommendation(**fields)


def bank_with_recs(schema, rec_ids: Iterable[str], **bank_kwargs) -> KnowledgeBank:
    bank = KnowledgeBank(schema, **bank_kwargs)
    for rec_id in rec_ids:
        bank.add_recommendation(make_rec(rec_id))
    return bank


def add_peer(
    bank: KnowledgeBank,
    session_id: str,
    vector: Sequence[float],
    ratings: dict[str, int] | None = None,
    user_ref: str | None = None,
) -> None:
    """Store one past session and its ratings directly in the bank."""
    bank.add_session(
        SessionRecord(
            session_id=session_id,
            feature_vector=FeatureVector(tuple(float(v) for v in vector), bank.schema.version),
            anonymous=user_ref is None,
            user_ref=user_ref,
            completed_at="2026-01-02T00:00:00+00:00",
        )
    )
    for rec_id, score in (ratings or {}).items():
        bank.record_rating(
            RatingRecord(
                session_id=session_id,
                rec_id=rec_id,
                score=score,
                timestamp="2026-01-02T00:00:00+00:00",
            )
        )


def sequential_tokens(prefix: str = "sess"):
    """Deterministic token source: sess-0001, sess-0002, ..."""
    counter = iter(range(1, 10_000))

    def next_token() -> str:
        return f"{prefix}-{next(counter):04d}"

    return next_token


# --- independent oracles -----------------------------------------------------

def cosine_oracle(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine via 50-digit Decimal arithmetic; no shared code with the engine."""
    getcontext().prec = 50
    da = [Decimal(repr(x)) for x in a]
    db = [Decimal(repr(x)) for x in b]
    dot = sum(x * y for x, y in zip(da, db))
    na = sum(x * x for x in da).sqrt()
    nb = sum(x * x for x in db).sqrt()
    if na == 0 or nb == 0:
        return 0.0
    return float(dot / (na * nb))


def candidate_oracle(
    peers: Sequence[tuple[str, float]],
    ratings: dict[str, dict[str, int]],
    active_rec_ids: set[str],
    rho: float,
) -> list[tuple[str, Fraction]]:
    """Brute-force weighted means with exact rationals.

    peers: (session_id, similarity) pairs; ratings: session_id -> rec_id -> score.
    Returns (rec_id, weighted_score) sorted by descending score then rec_id.
    """
    totals: dict[str, Fraction] = {}
    weights: dict[str, Fraction] = {}
    for session_id, similarity in peers:
        if similarity <= 0:
            continue
        sim = Fraction(similarity)
        for rec_id, score in ratings.get(session_id, {}).items():
            if rec_id not in active_rec_ids:
                continue
            totals[rec_id] = totals.get(rec_id, Fraction(0)) + sim * score
            weights[rec_id] = weights.get(rec_id, Fraction(0)) + sim
    included = [
        (rec_id, totals[rec_id] / weights[rec_id])
        for rec_id in totals
        if totals[rec_id] / weights[rec_id] >= Fraction(rho)
    ]
    included.sort(key=lambda pair: (-pair[1], pair[0]))
    return included


def assert_referential_integrity(bank: KnowledgeBank) -> None:
    rec_ids = bank.recommendation_ids()
    for record in bank.all_ratings():
        assert record.rec_id in rec_ids, f"dangling rating for {record.rec_id!r}"
    for suggestion in bank.list_suggestions():
        if suggestion.resulting_rec_id is not None:
            assert suggestion.resulting_rec_id in rec_ids, (
                f"dangling resulting_rec_id {suggestion.resulting_rec_id!r}"
            )
