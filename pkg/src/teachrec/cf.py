"""User-based collaborative filtering over session feature vectors.

Peers are past sessions ranked by cosine similarity to the querying
session's vector; the candidate set is every active recommendation those
peers rated, scored by the similarity-weighted mean rating.  Weighted means
accumulate in exact rational arithmetic so membership at the acceptance
threshold is stable regardless of summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import DimensionMismatch
from .features import FeatureVector

DEFAULT_TOP_K = 5
DEFAULT_SIMILARITY_FLOOR = 0.5
DEFAULT_MIN_WEIGHTED_RATING = 3.0


@dataclass(frozen=True)
class CFParams:
    """Hyperparameters of the peer search, overridable via service config."""

    k: int = DEFAULT_TOP_K
    theta: float = DEFAULT_SIMILARITY_FLOOR
    rho: float = DEFAULT_MIN_WEIGHTED_RATING

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if not 1.0 <= self.rho <= 5.0:
            raise ValueError("rho must lie in [1, 5]")


@dataclass(frozen=True)
class SimilarityScore:
    session_id: str
    score: float


@dataclass(frozen=True)
class CandidateEntry:
    rec_id: str
    weighted_score: float
    support: int  # contributing peer ratings


@dataclass(frozen=True)
class CandidateSet:
    entries: tuple[CandidateEntry, ...] = ()
    query: Optional[FeatureVector] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def rec_ids(self) -> tuple[str, ...]:
        return tuple(e.rec_id for e in self.entries)


def _components(vector) -> Sequence[float]:
    return vector.values if isinstance(vector, FeatureVector) else vector


def cosine_similarity(a, b) -> float:
    """Cosine of two equal-length non-negative vectors, in [0, 1].

    Zero-norm vectors (every feature skipped) are similar to nothing: 0.0.
    """
    va, vb = _components(a), _components(b)
    if len(va) != len(vb):
        raise DimensionMismatch(f"vector dimensions differ: {len(va)} vs {len(vb)}")
    # squaring components near 1e-160 underflows; rescale by the largest
    # magnitude first so only true zero vectors hit the zero-norm branch
    scale_a = max((abs(x) for x in va), default=0.0)
    scale_b = max((abs(y) for y in vb), default=0.0)
    if scale_a == 0.0 or scale_b == 0.0:
        return 0.0
    ua = [x / scale_a for x in va]
    ub = [y / scale_b for y in vb]
    dot = math.fsum(x * y for x, y in zip(ua, ub))
    norm_a = math.sqrt(math.fsum(x * x for x in ua))
    norm_b = math.sqrt(math.fsum(y * y for y in ub))
    value = dot / (norm_a * norm_b)
    if value > 1.0:
        return 1.0
    if value < -1.0:
        return -1.0
    return value


def similar_sessions(
    query: FeatureVector,
    bank,
    k: int = DEFAULT_TOP_K,
    theta: float = DEFAULT_SIMILARITY_FLOOR,
    exclude_session_id: str | None = None,
) -> list[SimilarityScore]:
    """Top-k past sessions with similarity >= theta, excluding the querier.

    Descending by score with session_id as the tie-break; an empty list is a
    normal result and routes the session to the expert rules.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    scored = []
    for record in bank.session_records():
        if record.session_id == exclude_session_id:
            continue
        score = cosine_similarity(query, record.feature_vector)
        if score >= theta:
            scored.append(SimilarityScore(record.session_id, score))
    scored.sort(key=lambda s: (-s.score, s.session_id))
    return scored[:k]


def candidate_set(
    peers: Sequence[SimilarityScore],
    bank,
    rho: float = DEFAULT_MIN_WEIGHTED_RATING,
    query: FeatureVector | None = None,
) -> CandidateSet:
    """Peer-top-rated active recommendations, scored by weighted mean rating.

    weighted = sum(sim_i * rating_i) / sum(sim_i) over peers that rated the
    recommendation; entries with weighted >= rho survive.  Zero-similarity
    peers carry no information and contribute nothing.
    """
    if not 1.0 <= rho <= 5.0:
        raise ValueError("rho must lie in [1, 5]")
    contributions: dict[str, list[tuple[Fraction, int]]] = {}
    for peer in peers:
        if peer.score <= 0.0:
            continue
        sim = Fraction(peer.score)
        for rec_id, record in bank.ratings_by_session(peer.session_id).items():
            rec = bank.recommendation(rec_id)
            if rec.status != "active":
                continue
            contributions.setdefault(rec_id, []).append((sim, record.score))

    rho_exact = Fraction(rho)
    included = []
    for rec_id, contribs in contributions.items():
        total_weight = sum(sim for sim, _ in contribs)
        weighted = sum(sim * score for sim, score in contribs) / total_weight
        if weighted >= rho_exact:
            included.append((rec_id, weighted, len(contribs)))
    # order on the exact values; floats are only the reporting format
    included.sort(key=lambda item: (-item[1], item[0]))
    entries = tuple(CandidateEntry(rec_id, float(weighted), support)
                    for rec_id, weighted, support in included)
    return CandidateSet(entries, query=query)
