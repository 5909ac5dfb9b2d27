"""Conversational session service: question flow, pipeline, presentation, feedback.

One consultation is a strict state machine (asking -> recommending -> closed).
When the last answer lands, the full pipeline runs: the answers encode into a
vector, the most similar past sessions are found, their top-rated
recommendations form the candidate set, and the expert rules refine and
extend it into the presentation queue.  Ratings and suggestions flow back
into the bank as they arrive.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import cf
from .bank import KnowledgeBank, RatingRecord, SessionRecord
from .errors import (
    EmptySuggestion,
    MalformedRequest,
    NotPresented,
    NotReady,
    ServiceNotSeeded,
    UnknownFeature,
    UnknownSession,
    WrongQuestion,
)
from .features import (
    FeatureDef,
    FeatureSchema,
    SessionFeatures,
    encode,
    next_question,
    validate_answer,
)
from .rules import FinalSet, refine

MODE_IDENTIFIED = "identified"
MODE_ANONYMOUS = "anonymous"

PHASE_ASKING = "asking"
PHASE_RECOMMENDING = "recommending"
PHASE_CLOSED = "closed"

DEFAULT_IDLE_TIMEOUT_S = 3600.0


@dataclass(frozen=True)
class RecommendationCard:
    """What the user actually sees: text fetched from the bank at presentation time."""

    rec_id: str
    title: str
    body: str
    interaction_mode: str


@dataclass(frozen=True)
class SessionSummary:
    presented: int
    rated: int


@dataclass
class Session:
    session_id: str
    anonymous: bool
    user_ref: Optional[str]
    answers: SessionFeatures
    phase: str = PHASE_ASKING
    queue: Optional[FinalSet] = None
    cursor: int = 0
    presented: list[str] = field(default_factory=list)
    rated: set[str] = field(default_factory=set)
    last_activity: float = 0.0


def _default_token_source() -> str:
    return secrets.token_urlsafe(16)


class SessionService:
    """Holds live sessions and drives the recommendation pipeline.

    Operations take one service-wide lock: per-session ordering is the client
    contract, and desk-scale traffic does not warrant finer locking.  The
    token source and clock are injectable so tests (and the protocol golden
    fixtures) can run fully deterministic sessions.
    """

    def __init__(
        self,
        schema: Optional[FeatureSchema],
        bank: Optional[KnowledgeBank],
        params: cf.CFParams | None = None,
        idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S,
        token_source: Callable[[], str] | None = None,
        clock: Callable[[], float] | None = None,
    ):
        self.schema = schema
        self.bank = bank
        self.params = params or cf.CFParams()
        self.idle_timeout_s = idle_timeout_s
        self._token_source = token_source or _default_token_source
        self._clock = clock or time.monotonic
        self._sessions: dict[str, Session] = {}
        self._lock = threading.RLock()

    # --- lifecycle -------------------------------------------------------------

    def start_session(self, mode: str, user_ref: str | None = None) -> tuple[str, FeatureDef]:
        if mode not in (MODE_IDENTIFIED, MODE_ANONYMOUS):
            raise MalformedRequest(f"mode must be 'identified' or 'anonymous', got {mode!r}")
        if mode == MODE_IDENTIFIED and not user_ref:
            raise MalformedRequest("identified sessions need a user_ref")
        with self._lock:
            if self.schema is None or self.bank is None:
                raise ServiceNotSeeded("no feature schema loaded; seed the service first")
            anonymous = mode == MODE_ANONYMOUS
            session = Session(
                session_id=self._token_source(),
                anonymous=anonymous,
                # a user_ref sent alongside anonymous mode is dropped, never stored
                user_ref=None if anonymous else user_ref,
                answers=SessionFeatures(self.schema.version),
                last_activity=self._clock(),
            )
            self._sessions[session.session_id] = session
            first = next_question(self.schema, session.answers)
            assert first is not None  # schemas are non-empty by construction
            return session.session_id, first

    def submit_answer(self, session_id: str, feature_id: str, raw: object):
        """Store one validated answer.

        Returns ``("question", FeatureDef)`` while the flow continues, or
        ``("ready", count)`` once the pipeline has produced the final set.
        """
        with self._lock:
            session = self._active(session_id)
            if session.phase != PHASE_ASKING:
                raise WrongQuestion("this session is no longer collecting answers")
            fdef = self.schema.feature_def(feature_id)  # UnknownFeature on bad ids
            expected = next_question(self.schema, session.answers)
            if expected is None or expected.id != fdef.id:
                raise WrongQuestion(
                    f"expected an answer for {expected.id!r}" if expected
                    else "no question is pending"
                )
            session.answers.set_answer(fdef.id, validate_answer(fdef, raw))
            nxt = next_question(self.schema, session.answers)
            if nxt is not None:
                return "question", nxt
            self._run_pipeline(session)
            return "ready", len(session.queue)

    def _run_pipeline(self, session: Session) -> None:
        vector = encode(session.answers, self.schema)
        self.bank.add_session(
            SessionRecord(
                session_id=session.session_id,
                feature_vector=vector,
                anonymous=session.anonymous,
                user_ref=session.user_ref,
            )
        )
        peers = cf.similar_sessions(
            vector,
            self.bank,
            k=self.params.k,
            theta=self.params.theta,
            exclude_session_id=session.session_id,
        )
        candidates = cf.candidate_set(peers, self.bank, rho=self.params.rho, query=vector)
        # sessions in flight keep the rule set they started refining with
        session.queue = refine(candidates, session.answers, self.bank.rules(), self.bank)
        session.cursor = 0
        session.phase = PHASE_RECOMMENDING

    def next_recommendation(self, session_id: str) -> Optional[RecommendationCard]:
        """Card at the cursor, advancing it; ``None`` when the queue is exhausted."""
        with self._lock:
            session = self._active(session_id)
            if session.phase != PHASE_RECOMMENDING:
                raise NotReady("answers are still being collected")
            if session.cursor >= len(session.queue):
                return None
            entry = session.queue.entries[session.cursor]
            session.cursor += 1
            rec = self.bank.recommendation(entry.rec_id)  # current text, not a copy
            session.presented.append(rec.rec_id)
            return RecommendationCard(rec.rec_id, rec.title, rec.body, rec.interaction_mode)

    def rate_current(self, session_id: str, rec_id: str, score: int) -> None:
        with self._lock:
            session = self._active(session_id)
            if rec_id not in session.presented:
                raise NotPresented(f"recommendation {rec_id!r} was not presented here")
            self.bank.record_rating(
                RatingRecord(session_id=session_id, rec_id=rec_id, score=score)
            )
            session.rated.add(rec_id)

    def suggest_practice(self, session_id: str, text: str) -> str:
        with self._lock:
            session = self._active(session_id)
            if not isinstance(text, str) or not text.strip():
                raise EmptySuggestion("suggestion text must not be empty")
            return self.bank.submit_suggestion(
                text, session.session_id, suggestion_id=self._token_source()
            )

    def close_session(self, session_id: str) -> SessionSummary:
        with self._lock:
            session = self._active(session_id)
            session.phase = PHASE_CLOSED
            summary = SessionSummary(len(session.presented), len(session.rated))
            del self._sessions[session_id]
            return summary

    # --- internals -------------------------------------------------------------

    def _active(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is not None and self._expired(session):
            del self._sessions[session_id]
            session = None
        if session is None:
            raise UnknownSession(f"no active session {session_id!r}")
        session.last_activity = self._clock()
        return session

    def _expired(self, session: Session) -> bool:
        return self._clock() - session.last_activity > self.idle_timeout_s

    def live_session_count(self) -> int:
        with self._lock:
            return len(self._sessions)
