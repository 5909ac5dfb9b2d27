"""Knowledge bank: the single durable store behind the recommender.

Holds the recommendation corpus, per-session feature vectors, ratings, the
expert rule set, and the moderation queue for user-suggested practices.
State lives in memory, guarded by one writer lock, and persists as a single
versioned JSON snapshot written atomically (temp file, fsync, rename).
"""

from __future__ import annotations

import fcntl
import json
import os
import secrets
import tempfile
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

from .errors import (
    AlreadyResolved,
    CorruptSnapshot,
    DuplicateId,
    EmptySuggestion,
    InvalidInteractionMode,
    MalformedCorpus,
    ScoreOutOfRange,
    SnapshotLocked,
    UnknownRecommendation,
    UnknownSuggestion,
)
from .features import FeatureSchema, FeatureVector
from .rules import Rule, load_rules, rule_to_dict

SNAPSHOT_FORMAT_VERSION = 1

INTERACTION_MODES = ("learner-content", "learner-instructor", "learner-learner")
ORIGINS = ("seeded", "expert_added", "user_suggested")
STATUSES = ("active", "pending", "retired")

SUGGESTION_PENDING = "pending"
SUGGESTION_APPROVED = "approved"
SUGGESTION_REJECTED = "rejected"


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class Recommendation:
    """One pedagogical practice in the corpus."""

    rec_id: str
    title: str
    body: str
    interaction_mode: str
    origin: str = "seeded"
    status: str = "active"
    created_at: str = field(default_factory=utc_now_iso)


@dataclass(frozen=True)
class RatingRecord:
    session_id: str
    rec_id: str
    score: int
    timestamp: str = field(default_factory=utc_now_iso)


@dataclass(frozen=True)
class SessionRecord:
    """A completed consultation's footprint: the vector, never the transcript."""

    session_id: str
    feature_vector: FeatureVector
    anonymous: bool
    user_ref: Optional[str] = None
    completed_at: str = field(default_factory=utc_now_iso)


@dataclass(frozen=True)
class Suggestion:
    suggestion_id: str
    text: str
    proposer_session_id: str
    state: str = SUGGESTION_PENDING
    resulting_rec_id: Optional[str] = None
    created_at: str = field(default_factory=utc_now_iso)


def _default_id_factory() -> str:
    return secrets.token_urlsafe(8)


class KnowledgeBank:
    """In-memory bank bound to one feature schema, optionally snapshot-backed.

    All mutations serialize through ``self._lock``; when ``snapshot_path`` is
    set, every mutation rewrites the snapshot so a crash never loses more
    than the in-flight command.
    """

    def __init__(
        self,
        schema: FeatureSchema,
        snapshot_path: str | Path | None = None,
        id_factory: Callable[[], str] | None = None,
    ):
        self.schema = schema
        self.snapshot_path = Path(snapshot_path) if snapshot_path else None
        self._id_factory = id_factory or _default_id_factory
        self._lock = threading.RLock()
        self._recs: dict[str, Recommendation] = {}
        self._ratings: dict[tuple[str, str], RatingRecord] = {}
        self._sessions: dict[str, SessionRecord] = {}
        self._suggestions: dict[str, Suggestion] = {}
        self._rules: tuple[Rule, ...] = ()

    # --- mutations -----------------------------------------------------------

    def add_recommendation(self, rec: Recommendation) -> str:
        _validate_recommendation(rec)
        with self._lock:
            if rec.rec_id in self._recs:
                raise DuplicateId(f"recommendation {rec.rec_id!r} already exists")
            self._recs[rec.rec_id] = rec
            self._autosave()
        return rec.rec_id

    def import_recommendations(self, recs: list[Recommendation]) -> int:
        """All-or-nothing bulk import; duplicate ids abort the whole batch."""
        for rec in recs:
            _validate_recommendation(rec)
        with self._lock:
            batch_ids = [r.rec_id for r in recs]
            dupes = sorted(
                set(rid for rid in batch_ids if rid in self._recs)
                | {rid for rid in batch_ids if batch_ids.count(rid) > 1}
            )
            if dupes:
                raise DuplicateId(f"duplicate recommendation ids: {', '.join(dupes)}")
            for rec in recs:
                self._recs[rec.rec_id] = rec
            self._autosave()
        return len(recs)

    def update_recommendation_text(
        self, rec_id: str, title: str | None = None, body: str | None = None
    ) -> None:
        with self._lock:
            rec = self.recommendation(rec_id)
            self._recs[rec_id] = replace(
                rec,
                title=rec.title if title is None else title,
                body=rec.body if body is None else body,
            )
            self._autosave()

    def retire_recommendation(self, rec_id: str) -> None:
        with self._lock:
            rec = self.recommendation(rec_id)
            self._recs[rec_id] = replace(rec, status="retired")
            self._autosave()

    def record_rating(self, record: RatingRecord) -> None:
        if not isinstance(record.score, int) or isinstance(record.score, bool) \
                or not 1 <= record.score <= 5:
            raise ScoreOutOfRange(f"score must be an integer in 1..5, got {record.score!r}")
        with self._lock:
            rec = self._recs.get(record.rec_id)
            if rec is None or rec.status != "active":
                raise UnknownRecommendation(
                    f"no active recommendation {record.rec_id!r} to rate"
                )
            # one opinion per (session, rec): latest wins
            self._ratings[(record.session_id, record.rec_id)] = record
            self._autosave()

    def add_session(self, record: SessionRecord) -> None:
        if record.anonymous and record.user_ref is not None:
            raise ValueError("anonymous session records must not carry a user_ref")
        if record.feature_vector.dimension != self.schema.dimension:
            raise CorruptSnapshot(
                f"session {record.session_id!r} vector has dimension"
                f" {record.feature_vector.dimension}, schema needs {self.schema.dimension}"
            )
        with self._lock:
            if record.session_id in self._sessions:
                raise DuplicateId(f"session {record.session_id!r} already recorded")
            self._sessions[record.session_id] = record
            self._autosave()

    def submit_suggestion(
        self, text: str, session_id: str, suggestion_id: str | None = None
    ) -> str:
        if not isinstance(text, str) or not text.strip():
            raise EmptySuggestion("suggestion text must not be empty")
        with self._lock:
            sid = suggestion_id or self._id_factory()
            if sid in self._suggestions:
                raise DuplicateId(f"suggestion {sid!r} already exists")
            self._suggestions[sid] = Suggestion(
                suggestion_id=sid, text=text.strip(), proposer_session_id=session_id
            )
            self._autosave()
        return sid

    def approve_suggestion(
        self, suggestion_id: str, rec_id: str, title: str, body: str, interaction_mode: str
    ) -> str:
        """Expert approval: the suggestion becomes an active recommendation."""
        with self._lock:
            suggestion = self._pending_suggestion(suggestion_id)
            rec = Recommendation(
                rec_id=rec_id,
                title=title,
                body=body,
                interaction_mode=interaction_mode,
                origin="user_suggested",
                status="active",
            )
            self.add_recommendation(rec)
            self._suggestions[suggestion_id] = replace(
                suggestion, state=SUGGESTION_APPROVED, resulting_rec_id=rec_id
            )
            self._autosave()
        return rec_id

    def reject_suggestion(self, suggestion_id: str) -> None:
        with self._lock:
            suggestion = self._pending_suggestion(suggestion_id)
            self._suggestions[suggestion_id] = replace(suggestion, state=SUGGESTION_REJECTED)
            self._autosave()

    def _pending_suggestion(self, suggestion_id: str) -> Suggestion:
        suggestion = self._suggestions.get(suggestion_id)
        if suggestion is None:
            raise UnknownSuggestion(f"no suggestion {suggestion_id!r}")
        if suggestion.state != SUGGESTION_PENDING:
            raise AlreadyResolved(f"suggestion {suggestion_id!r} is {suggestion.state}")
        return suggestion

    def set_rules(self, rules: tuple[Rule, ...]) -> None:
        """Atomically replace the rule set (already validated by the caller)."""
        with self._lock:
            self._rules = tuple(rules)
            self._autosave()

    # --- queries ---------------------------------------------------------------

    def recommendation(self, rec_id: str) -> Recommendation:
        with self._lock:
            rec = self._recs.get(rec_id)
        if rec is None:
            raise UnknownRecommendation(f"no recommendation {rec_id!r}")
        return rec

    def has_recommendation(self, rec_id: str) -> bool:
        with self._lock:
            return rec_id in self._recs

    def recommendation_ids(self) -> frozenset[str]:
        with self._lock:
            return frozenset(self._recs)

    def list_recommendations(self, status: str | None = None) -> list[Recommendation]:
        with self._lock:
            recs = list(self._recs.values())
        if status is not None:
            recs = [r for r in recs if r.status == status]
        return sorted(recs, key=lambda r: r.rec_id)

    def active_recommendations(self) -> list[Recommendation]:
        return self.list_recommendations(status="active")

    def ratings_for_rec(self, rec_id: str) -> list[RatingRecord]:
        with self._lock:
            records = [r for r in self._ratings.values() if r.rec_id == rec_id]
        return sorted(records, key=lambda r: r.session_id)

    def ratings_by_session(self, session_id: str) -> dict[str, RatingRecord]:
        with self._lock:
            return {
                rec_id: record
                for (sid, rec_id), record in self._ratings.items()
                if sid == session_id
            }

    def all_ratings(self) -> list[RatingRecord]:
        with self._lock:
            records = list(self._ratings.values())
        return sorted(records, key=lambda r: (r.session_id, r.rec_id))

    def rated_rec_ids(self) -> frozenset[str]:
        with self._lock:
            return frozenset(rec_id for (_sid, rec_id) in self._ratings)

    def session_records(self) -> list[SessionRecord]:
        with self._lock:
            records = list(self._sessions.values())
        return sorted(records, key=lambda r: r.session_id)

    def list_suggestions(self, state: str | None = None) -> list[Suggestion]:
        with self._lock:
            items = list(self._suggestions.values())
        if state is not None:
            items = [s for s in items if s.state == state]
        return sorted(items, key=lambda s: s.suggestion_id)

    def rules(self) -> tuple[Rule, ...]:
        with self._lock:
            return self._rules

    def counts(self) -> dict:
        with self._lock:
            return {
                "recommendations": len(self._recs),
                "ratings": len(self._ratings),
                "sessions": len(self._sessions),
                "suggestions": len(self._suggestions),
                "rules": len(self._rules),
            }

    def stats(self) -> dict:
        with self._lock:
            recs = list(self._recs.values())
            ratings = list(self._ratings.values())
            by_mode = {mode: 0 for mode in INTERACTION_MODES}
            by_origin = {origin: 0 for origin in ORIGINS}
            by_status = {status: 0 for status in STATUSES}
            for rec in recs:
                by_mode[rec.interaction_mode] += 1
                by_origin[rec.origin] += 1
                by_status[rec.status] += 1
            scores: dict[str, list[int]] = {}
            for record in ratings:
                scores.setdefault(record.rec_id, []).append(record.score)
            mean_by_rec = {
                rec_id: sum(vals) / len(vals) for rec_id, vals in sorted(scores.items())
            }
            suggestion_states = {
                state: sum(1 for s in self._suggestions.values() if s.state == state)
                for state in (SUGGESTION_PENDING, SUGGESTION_APPROVED, SUGGESTION_REJECTED)
            }
            return {
                "recommendations": {
                    "total": len(recs),
                    "by_mode": by_mode,
                    "by_origin": by_origin,
                    "by_status": by_status,
                },
                "ratings": {"count": len(ratings), "mean_by_rec": mean_by_rec},
                "sessions": {"count": len(self._sessions)},
                "suggestions": suggestion_states,
            }

    def dump(self) -> dict:
        """Exhaustive observable state; equality of dumps defines bank equality."""
        with self._lock:
            return {
                "schema_version": self.schema.version,
                "recommendations": [
                    _rec_to_dict(r) for r in self.list_recommendations()
                ],
                "ratings": [_rating_to_dict(r) for r in self.all_ratings()],
                "sessions": [_session_to_dict(s) for s in self.session_records()],
                "suggestions": [_suggestion_to_dict(s) for s in self.list_suggestions()],
                "rules": [rule_to_dict(r) for r in self._rules],
                "stats": self.stats(),
            }

    # --- persistence -----------------------------------------------------------

    def to_document(self) -> dict:
        with self._lock:
            return {
                "version": SNAPSHOT_FORMAT_VERSION,
                "schema_version": self.schema.version,
                "recommendations": [_rec_to_dict(r) for r in self.list_recommendations()],
                "sessions": [_session_to_dict(s) for s in self.session_records()],
                "ratings": [_rating_to_dict(r) for r in self.all_ratings()],
                "rules": [rule_to_dict(r) for r in self._rules],
                "suggestions": [_suggestion_to_dict(s) for s in self.list_suggestions()],
            }

    def save(self, path: str | Path | None = None) -> Path:
        target = Path(path) if path else self.snapshot_path
        if target is None:
            raise ValueError("no snapshot path configured")
        document = self.to_document()
        _atomic_write_json(target, document)
        return target

    def load(self, path: str | Path | None = None) -> None:
        """Replace state from a snapshot file; all-or-nothing.

        Any parse or invariant failure raises CorruptSnapshot and leaves the
        in-memory state untouched.
        """
        source = Path(path) if path else self.snapshot_path
        if source is None:
            raise ValueError("no snapshot path configured")
        try:
            text = source.read_text(encoding="utf-8")
        except OSError as exc:
            raise CorruptSnapshot(f"{source}: cannot read snapshot: {exc}") from exc
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptSnapshot(
                f"{source}: invalid JSON at line {exc.lineno}: {exc.msg}"
            ) from exc
        self.load_document(document, source=str(source))

    def load_document(self, document: object, source: str = "<document>") -> None:
        """Replace state from an already-parsed snapshot document; all-or-nothing."""
        state = _parse_snapshot(document, self.schema, source)
        with self._lock:
            self._recs, self._sessions, self._ratings, self._rules, self._suggestions = state
            self._autosave()

    def _autosave(self) -> None:
        if self.snapshot_path is not None:
            self.save(self.snapshot_path)


def _validate_recommendation(rec: Recommendation) -> None:
    if rec.interaction_mode not in INTERACTION_MODES:
        raise InvalidInteractionMode(
            f"recommendation {rec.rec_id!r}: interaction_mode must be one of"
            f" {list(INTERACTION_MODES)}, got {rec.interaction_mode!r}"
        )
    if rec.origin not in ORIGINS:
        raise InvalidInteractionMode(
            f"recommendation {rec.rec_id!r}: origin must be one of {list(ORIGINS)}"
        )
    if rec.status not in STATUSES:
        raise InvalidInteractionMode(
            f"recommendation {rec.rec_id!r}: status must be one of {list(STATUSES)}"
        )
    if not rec.rec_id or not rec.title:
        raise InvalidInteractionMode(
            f"recommendation {rec.rec_id!r}: rec_id and title must be non-empty"
        )


def parse_corpus(document: object, source: str = "<corpus>") -> list[Recommendation]:
    """Parse a recommendation corpus (snapshot-format document, extra keys ignored).

    Malformed entries abort the whole parse, naming the offending record.
    """
    if not isinstance(document, dict) or not isinstance(document.get("recommendations"), list):
        raise MalformedCorpus(
            f"{source}: corpus must be an object with a 'recommendations' array"
        )
    out: list[Recommendation] = []
    for i, item in enumerate(document["recommendations"]):
        where = f"{source}: recommendations[{i}]"
        if not isinstance(item, dict):
            raise MalformedCorpus(f"{where}: must be an object")
        rec_id = item.get("rec_id", "<missing rec_id>")
        try:
            rec = Recommendation(
                rec_id=item["rec_id"],
                title=item["title"],
                body=item["body"],
                interaction_mode=item["interaction_mode"],
                origin=item.get("origin", "seeded"),
                status=item.get("status", "active"),
                created_at=item.get("created_at", utc_now_iso()),
            )
            _validate_recommendation(rec)
        except KeyError as exc:
            raise MalformedCorpus(f"{where} ({rec_id!r}): missing field {exc}") from exc
        except InvalidInteractionMode as exc:
            raise MalformedCorpus(f"{where} ({rec_id!r}): {exc.message}") from exc
        out.append(rec)
    return out


# --- serialization helpers ---------------------------------------------------

def _rec_to_dict(rec: Recommendation) -> dict:
    return {
        "rec_id": rec.rec_id,
        "title": rec.title,
        "body": rec.body,
        "interaction_mode": rec.interaction_mode,
        "origin": rec.origin,
        "status": rec.status,
        "created_at": rec.created_at,
    }


def _rating_to_dict(record: RatingRecord) -> dict:
    return {
        "session_id": record.session_id,
        "rec_id": record.rec_id,
        "score": record.score,
        "timestamp": record.timestamp,
    }


def _session_to_dict(record: SessionRecord) -> dict:
    out = {
        "session_id": record.session_id,
        "feature_vector": list(record.feature_vector.values),
        "anonymous": record.anonymous,
        "completed_at": record.completed_at,
    }
    # key deliberately absent (not blanked) for anonymous sessions
    if not record.anonymous and record.user_ref is not None:
        out["user_ref"] = record.user_ref
    return out


def _suggestion_to_dict(s: Suggestion) -> dict:
    out = {
        "suggestion_id": s.suggestion_id,
        "text": s.text,
        "proposer_session_id": s.proposer_session_id,
        "state": s.state,
        "created_at": s.created_at,
    }
    if s.resulting_rec_id is not None:
        out["resulting_rec_id"] = s.resulting_rec_id
    return out


def suggestion_views(bank: KnowledgeBank, state: str | None = None) -> list[dict]:
    """Moderation-queue view: suggestion fields plus the proposer (or anonymous)."""
    records = {r.session_id: r for r in bank.session_records()}
    views = []
    for item in bank.list_suggestions(state):
        record = records.get(item.proposer_session_id)
        view = {
            "suggestion_id": item.suggestion_id,
            "text": item.text,
            "proposer": record.user_ref if record and record.user_ref else "anonymous",
            "state": item.state,
        }
        if item.resulting_rec_id is not None:
            view["resulting_rec_id"] = item.resulting_rec_id
        views.append(view)
    return views


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise CorruptSnapshot(message)


def _parse_snapshot(document: object, schema: FeatureSchema, source: str):
    _require(isinstance(document, dict), f"{source}: snapshot must be a JSON object")
    _require(
        document.get("version") == SNAPSHOT_FORMAT_VERSION,
        f"{source}: unsupported snapshot version {document.get('version')!r}",
    )
    _require(
        document.get("schema_version") == schema.version,
        f"{source}: snapshot schema_version {document.get('schema_version')!r}"
        f" does not match active schema {schema.version!r}",
    )
    for key in ("recommendations", "sessions", "ratings", "rules", "suggestions"):
        _require(isinstance(document.get(key), list), f"{source}: {key!r} must be an array")

    recs: dict[str, Recommendation] = {}
    for i, item in enumerate(document["recommendations"]):
        where = f"{source}: recommendations[{i}]"
        _require(isinstance(item, dict), f"{where}: must be an object")
        try:
            rec = Recommendation(
                rec_id=item["rec_id"],
                title=item["title"],
                body=item["body"],
                interaction_mode=item["interaction_mode"],
                origin=item.get("origin", "seeded"),
                status=item.get("status", "active"),
                created_at=item.get("created_at", utc_now_iso()),
            )
            _validate_recommendation(rec)
        except (KeyError, TypeError, InvalidInteractionMode) as exc:
            raise CorruptSnapshot(f"{where}: {exc}") from exc
        _require(rec.rec_id not in recs, f"{where}: duplicate rec_id {rec.rec_id!r}")
        recs[rec.rec_id] = rec

    sessions: dict[str, SessionRecord] = {}
    for i, item in enumerate(document["sessions"]):
        where = f"{source}: sessions[{i}]"
        _require(isinstance(item, dict), f"{where}: must be an object")
        try:
            vector_values = item["feature_vector"]
            _require(
                isinstance(vector_values, list)
                and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                        for v in vector_values),
                f"{where}: feature_vector must be an array of numbers",
            )
            record = SessionRecord(
                session_id=item["session_id"],
                feature_vector=FeatureVector(
                    tuple(float(v) for v in vector_values), schema.version
                ),
                anonymous=bool(item["anonymous"]),
                user_ref=item.get("user_ref"),
                completed_at=item.get("completed_at", utc_now_iso()),
            )
        except KeyError as exc:
            raise CorruptSnapshot(f"{where}: missing field {exc}") from exc
        _require(
            record.feature_vector.dimension == schema.dimension,
            f"{where}: vector dimension {record.feature_vector.dimension}"
            f" does not match schema dimension {schema.dimension}",
        )
        _require(
            not (record.anonymous and record.user_ref is not None),
            f"{where}: anonymous session must not carry user_ref",
        )
        _require(
            record.session_id not in sessions,
            f"{where}: duplicate session_id {record.session_id!r}",
        )
        sessions[record.session_id] = record

    ratings: dict[tuple[str, str], RatingRecord] = {}
    for i, item in enumerate(document["ratings"]):
        where = f"{source}: ratings[{i}]"
        _require(isinstance(item, dict), f"{where}: must be an object")
        try:
            record = RatingRecord(
                session_id=item["session_id"],
                rec_id=item["rec_id"],
                score=item["score"],
                timestamp=item.get("timestamp", utc_now_iso()),
            )
        except KeyError as exc:
            raise CorruptSnapshot(f"{where}: missing field {exc}") from exc
        _require(
            isinstance(record.score, int) and not isinstance(record.score, bool)
            and 1 <= record.score <= 5,
            f"{where}: score must be an integer in 1..5",
        )
        _require(record.rec_id in recs, f"{where}: unknown rec_id {record.rec_id!r}")
        _require(
            record.session_id in sessions,
            f"{where}: unknown session_id {record.session_id!r}",
        )
        key = (record.session_id, record.rec_id)
        _require(key not in ratings, f"{where}: duplicate rating for {key}")
        ratings[key] = record

    try:
        parsed_rules = load_rules(
            {"rules": document["rules"]}, schema, set(recs)
        )
    except Exception as exc:
        raise CorruptSnapshot(f"{source}: rules: {exc}") from exc

    suggestions: dict[str, Suggestion] = {}
    for i, item in enumerate(document["suggestions"]):
        where = f"{source}: suggestions[{i}]"
        _require(isinstance(item, dict), f"{where}: must be an object")
        try:
            suggestion = Suggestion(
                suggestion_id=item["suggestion_id"],
                text=item["text"],
                proposer_session_id=item["proposer_session_id"],
                state=item.get("state", SUGGESTION_PENDING),
                resulting_rec_id=item.get("resulting_rec_id"),
                created_at=item.get("created_at", utc_now_iso()),
            )
        except KeyError as exc:
            raise CorruptSnapshot(f"{where}: missing field {exc}") from exc
        _require(
            suggestion.state in (SUGGESTION_PENDING, SUGGESTION_APPROVED, SUGGESTION_REJECTED),
            f"{where}: invalid state {suggestion.state!r}",
        )
        if suggestion.state == SUGGESTION_APPROVED:
            _require(
                suggestion.resulting_rec_id in recs
                and recs[suggestion.resulting_rec_id].status == "active",
                f"{where}: approved suggestion must link an active recommendation",
            )
        _require(
            suggestion.suggestion_id not in suggestions,
            f"{where}: duplicate suggestion_id {suggestion.suggestion_id!r}",
        )
        suggestions[suggestion.suggestion_id] = suggestion

    return recs, sessions, ratings, parsed_rules, suggestions


def _atomic_write_json(path: Path, document: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=path.name, suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(document, handle, indent=2, sort_keys=True)
            handle.write("\n")
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_path, path)
    except Exception:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


class SnapshotFileLock:
    """Advisory exclusive lock keeping the service and CLI off one snapshot file."""

    def __init__(self, snapshot_path: str | Path):
        self.lock_path = Path(str(snapshot_path) + ".lock")
        self._handle = None

    def acquire(self) -> "SnapshotFileLock":
        self.lock_path.parent.mkdir(parents=True, exist_ok=True)
        handle = open(self.lock_path, "w")
        try:
            fcntl.flock(handle.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            handle.close()
            raise SnapshotLocked(
                f"{self.lock_path} is held by another process"
                " (is the service running? use --server instead)"
            )
        self._handle = handle
        return self

    def release(self) -> None:
        if self._handle is not None:
            fcntl.flock(self._handle.fileno(), fcntl.LOCK_UN)
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "SnapshotFileLock":
        return self.acquire()

    def __exit__(self, *exc_info) -> None:
        self.release()
