"""HTTP surface: the /v1 consultation protocol plus /v1/admin operator endpoints.

Every domain error crosses the wire as ``{"error_code", "message"}`` with the
status carried by the exception class; malformed request bodies map to the
same shape with code ``MalformedRequest``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .bank import KnowledgeBank, SnapshotFileLock, parse_corpus, suggestion_views
from .config import ServiceConfig
from .errors import MalformedRequest, ServiceNotSeeded, TeachRecError
from .features import (
    FeatureSchema,
    load_default_schema,
    load_schema,
    question_payload,
)
from .rules import load_rules, rules_to_document
from .service import SessionService


@dataclass
class AppState:
    """Everything one running service instance owns."""

    schema: Optional[FeatureSchema]
    bank: Optional[KnowledgeBank]
    service: SessionService
    config: Optional[ServiceConfig] = None
    lock: Optional[SnapshotFileLock] = None

    def close(self) -> None:
        if self.lock is not None:
            self.lock.release()
            self.lock = None


def bootstrap(config: ServiceConfig) -> AppState:
    """Build a ready-to-serve state: schema, snapshot-backed bank, session service.

    First boot order: take the snapshot lock, then load the snapshot if one
    exists, otherwise fall back to the seed corpus (when configured).  An
    explicit rules file always wins over whatever rules the snapshot carried.
    """
    schema = load_schema(config.schema_path) if config.schema_path else load_default_schema()
    lock = SnapshotFileLock(config.snapshot_path).acquire()
    try:
        bank = KnowledgeBank(schema, snapshot_path=config.snapshot_path)
        if config.snapshot_path.exists():
            bank.load()
        elif config.seed_path is not None:
            bank.load(config.seed_path)
        else:
            bank.save()
        if config.rules_path is not None:
            document = json.loads(config.rules_path.read_text(encoding="utf-8"))
            bank.set_rules(load_rules(document, schema, bank.recommendation_ids()))
        service = SessionService(
            schema, bank, params=config.cf, idle_timeout_s=config.idle_timeout_s
        )
    except BaseException:
        lock.release()
        raise
    return AppState(schema=schema, bank=bank, service=service, config=config, lock=lock)


class StartSessionBody(BaseModel):
    model_config = ConfigDict(extra="ignore")
    mode: Any = None
    user_ref: Any = None


class AnswerBody(BaseModel):
    model_config = ConfigDict(extra="ignore")
    feature_id: Any = None
    value: Any = None


class RatingBody(BaseModel):
    model_config = ConfigDict(extra="ignore")
    rec_id: Any = None
    score: Any = None


class SuggestionBody(BaseModel):
    model_config = ConfigDict(extra="ignore")
    text: Any = None


def _require_str(value: object, name: str) -> str:
    if not isinstance(value, str) or not value:
        raise MalformedRequest(f"{name} must be a non-empty string")
    return value


async def _document_body(request: Request) -> object:
    try:
        return json.loads(await request.body())
    except json.JSONDecodeError as exc:
        raise MalformedRequest(f"invalid JSON body: {exc.msg}") from exc


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="teachrec", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.teachrec = state
    # browser clients are served from their own origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(TeachRecError)
    async def _domain_error(_: Request, exc: TeachRecError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status,
            content={"error_code": exc.code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def _shape_error(_: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={
                "error_code": "MalformedRequest",
                "message": "request body does not match the endpoint shape",
            },
        )

    # --- consultation protocol ------------------------------------------------

    @app.post("/v1/sessions")
    async def start_session(body: StartSessionBody) -> dict:
        if body.user_ref is not None and not isinstance(body.user_ref, str):
            raise MalformedRequest("user_ref must be a string when present")
        session_id, first = state.service.start_session(body.mode, body.user_ref)
        return {"session_id": session_id, "question": question_payload(first)}

    @app.post("/v1/sessions/{session_id}/answers")
    async def submit_answer(session_id: str, body: AnswerBody) -> dict:
        feature_id = _require_str(body.feature_id, "feature_id")
        outcome, payload = state.service.submit_answer(session_id, feature_id, body.value)
        if outcome == "question":
            return {"question": question_payload(payload)}
        return {"ready": True, "count": payload}

    @app.post("/v1/sessions/{session_id}/next")
    async def next_recommendation(session_id: str) -> dict:
        card = state.service.next_recommendation(session_id)
        if card is None:
            return {"exhausted": True}
        return {
            "card": {
                "rec_id": card.rec_id,
                "title": card.title,
                "body": card.body,
                "interaction_mode": card.interaction_mode,
            }
        }

    @app.post("/v1/sessions/{session_id}/ratings")
    async def rate(session_id: str, body: RatingBody) -> dict:
        rec_id = _require_str(body.rec_id, "rec_id")
        state.service.rate_current(session_id, rec_id, body.score)
        return {}

    @app.post("/v1/sessions/{session_id}/suggestions")
    async def suggest(session_id: str, body: SuggestionBody) -> dict:
        suggestion_id = state.service.suggest_practice(session_id, body.text)
        return {"suggestion_id": suggestion_id}

    @app.post("/v1/sessions/{session_id}/close")
    async def close_session(session_id: str) -> dict:
        summary = state.service.close_session(session_id)
        return {"presented": summary.presented, "rated": summary.rated}

    @app.get("/v1/health")
    async def health() -> dict:
        if state.bank is None:
            return {"status": "unseeded", "bank_counts": {}}
        return {"status": "ok", "bank_counts": state.bank.counts()}

    # --- operator endpoints (the admin CLI's server mode) -----------------------

    @app.get("/v1/admin/stats")
    async def admin_stats() -> dict:
        return _bank(state).stats()

    @app.post("/v1/admin/seed")
    async def admin_seed(request: Request) -> dict:
        document = await _document_body(request)
        recs = parse_corpus(document, source="<request>")
        imported = _bank(state).import_recommendations(recs)
        return {"imported": imported}

    @app.post("/v1/admin/rules/validate")
    async def admin_rules_validate(request: Request) -> dict:
        document = await _document_body(request)
        bank = _bank(state)
        rules = load_rules(document, bank.schema, bank.recommendation_ids())
        return {"valid": True, "count": len(rules)}

    @app.post("/v1/admin/rules")
    async def admin_rules_load(request: Request) -> dict:
        document = await _document_body(request)
        bank = _bank(state)
        rules = load_rules(document, bank.schema, bank.recommendation_ids())
        bank.set_rules(rules)
        return {"loaded": len(rules)}

    @app.get("/v1/admin/rules")
    async def admin_rules_list() -> dict:
        return rules_to_document(_bank(state).rules())

    @app.get("/v1/admin/suggestions")
    async def admin_suggestions(
        suggestion_state: Optional[str] = Query(None, alias="state"),
    ) -> dict:
        return {"suggestions": suggestion_views(_bank(state), suggestion_state)}

    @app.post("/v1/admin/suggestions/{suggestion_id}/resolve")
    async def admin_resolve(suggestion_id: str, request: Request) -> dict:
        document = await _document_body(request)
        if not isinstance(document, dict):
            raise MalformedRequest("resolve body must be a JSON object")
        action = document.get("action")
        bank = _bank(state)
        if action == "reject":
            bank.reject_suggestion(suggestion_id)
            return {"outcome": "rejected"}
        if action == "approve":
            rec_id = bank.approve_suggestion(
                suggestion_id,
                rec_id=_require_str(document.get("rec_id"), "rec_id"),
                title=_require_str(document.get("title"), "title"),
                body=_require_str(document.get("body"), "body"),
                interaction_mode=_require_str(
                    document.get("interaction_mode"), "interaction_mode"
                ),
            )
            return {"outcome": "approved", "rec_id": rec_id}
        raise MalformedRequest("action must be 'approve' or 'reject'")

    @app.get("/v1/admin/snapshot")
    async def admin_snapshot_export() -> dict:
        return _bank(state).to_document()

    @app.post("/v1/admin/snapshot")
    async def admin_snapshot_import(request: Request) -> dict:
        document = await _document_body(request)
        bank = _bank(state)
        bank.load_document(document, source="<import>")
        return {"loaded": True, "counts": bank.counts()}

    return app


def _bank(state: AppState) -> KnowledgeBank:
    if state.bank is None:
        raise ServiceNotSeeded("no knowledge bank loaded")
    return state.bank
