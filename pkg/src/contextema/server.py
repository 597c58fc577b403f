"""HTTP+JSON API over the engine: device ingestion, EMA flow, therapist
message entry, engagement views, and the metrics report bundle.

One engine instance per process; per the engine's concurrency contract all
writes funnel through a single lock (desk scale), reads take snapshots.
"""

from __future__ import annotations

import threading
import time
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from pydantic import BaseModel, Field

from . import errors
from .config import EngineConfig
from .engine import Engine
from .ema import session_to_dict
from .messages import MessageCategory
from .metrics import report_to_dict
from .timebase import format_iso, parse_iso

_ERROR_STATUS = {
    errors.UnknownParticipant: 404,
    errors.SessionExpired: 409,
    errors.WrongNode: 409,
    errors.AlreadyCompleted: 409,
    errors.ValueOutOfDomain: 422,
    errors.EmptyText: 422,
    errors.BadParentLevel: 422,
    errors.CompleteBeforePlan: 409,
    errors.RatingOutOfDomain: 422,
    errors.MalformedTrace: 422,
    errors.EmptyGenericPool: 500,
}


def _http_error(exc: errors.EngineError) -> HTTPException:
    status = _ERROR_STATUS.get(type(exc), 400)
    return HTTPException(status_code=status, detail={"error": type(exc).__name__, "message": str(exc)})


class EnrollBody(BaseModel):
    participant_id: str = Field(min_length=1)
    tz_offset_s: int = 0
    enrolled_at: Optional[str] = None  # virtual-clock deployments pass this


class IngestBody(BaseModel):
    participant_id: str
    device_sent_at: str
    trace: str  # trace-grammar lines
    received_at: Optional[str] = None  # defaults to the service clock


class AnswerBody(BaseModel):
    node_id: str
    value: object
    answered_at: Optional[str] = None


class MessageBody(BaseModel):
    category: MessageCategory
    text: str


class TickBody(BaseModel):
    now: str


def serve_api(
    engine: Optional[Engine] = None,
    config: Optional[EngineConfig] = None,
    *,
    wall_clock: bool = False,
) -> FastAPI:
    """Build the API app around an engine.

    wall_clock=True starts a background thread running processing ticks at
    the configured interval against real time; otherwise time advances only
    through POST /v1/admin/tick (virtual-clock operation for tests and the
    simulator).
    """
    engine = engine or Engine(config or EngineConfig())
    app = FastAPI(title="contextema sync service", version="0.1.0")
    lock = threading.Lock()
    app.state.engine = engine

    token = engine.config.api_token

    def check_token(request: Request) -> None:
        if token and request.headers.get("x-api-token") != token:
            raise HTTPException(status_code=401, detail="missing or bad api token")

    def now_from(text: Optional[str]) -> int:
        if text:
            return parse_iso(text)
        if engine.last_tick_at is not None and not wall_clock:
            return engine.last_tick_at
        return int(time.time())

    guarded = [Depends(check_token)]

    @app.post("/v1/participants", status_code=201, dependencies=guarded)
    def enroll(body: EnrollBody):
        with lock:
            if body.participant_id in engine.store.participants:
                raise HTTPException(status_code=409, detail="already enrolled")
            profile = engine.enroll(
                body.participant_id, tz_offset_s=body.tz_offset_s, now=now_from(body.enrolled_at)
            )
        return {
            "participant_id": profile.participant_id,
            "tz_offset_s": profile.tz_offset_s,
            "enrolled_at": format_iso(profile.enrolled_at),
        }

    @app.post("/v1/ingest", dependencies=guarded)
    def ingest(body: IngestBody):
        sent = parse_iso(body.device_sent_at)
        if body.received_at:
            received = parse_iso(body.received_at)
        elif wall_clock:
            received = max(sent, int(time.time()))
        else:
            received = max(sent, engine.last_tick_at or sent)
        with lock:
            try:
                return engine.ingest_trace(
                    body.participant_id,
                    body.trace,
                    device_sent_at=sent,
                    received_at=received,
                )
            except errors.EngineError as exc:
                raise _http_error(exc) from None

    @app.get("/v1/participants/{pid}/context", dependencies=guarded)
    def context(pid: str, start: Optional[str] = Query(None, alias="from"),
                end: Optional[str] = Query(None, alias="to")):
        try:
            windows = engine.context_windows(
                pid,
                parse_iso(start) if start else None,
                parse_iso(end) if end else None,
            )
        except errors.EngineError as exc:
            raise _http_error(exc) from None
        return [
            {**w, "start": format_iso(w["start"]), "end": format_iso(w["end"])} for w in windows
        ]

    @app.get("/v1/participants/{pid}/sessions", dependencies=guarded)
    def sessions(pid: str):
        try:
            out = engine.sessions_as_dicts(pid)
        except errors.EngineError as exc:
            raise _http_error(exc) from None
        for s in out:
            s["delivered_at"] = format_iso(s["delivered_at"])
            s["expires_at"] = format_iso(s["expires_at"])
        return out

    @app.post("/v1/sessions/{session_id}/answers", dependencies=guarded)
    def answer(session_id: str, body: AnswerBody):
        with lock:
            try:
                session = engine.submit_answer(
                    session_id, body.node_id, body.value, now_from(body.answered_at)
                )
            except errors.EngineError as exc:
                raise _http_error(exc) from None
        return session_to_dict(session)

    @app.post("/v1/participants/{pid}/messages", status_code=201, dependencies=guarded)
    def add_message(pid: str, body: MessageBody):
        with lock:
            try:
                message = engine.add_message(pid, body.category, body.text, now=now_from(None))
            except errors.EngineError as exc:
                raise _http_error(exc) from None
        return {
            "message_id": message.message_id,
            "participant_scope": message.participant_scope,
            "category": message.category.value,
            "text": message.text,
            "created_by": message.created_by.value,
            "created_at": format_iso(message.created_at),
        }

    @app.get("/v1/participants/{pid}/messages", dependencies=guarded)
    def list_messages(pid: str, category: Optional[MessageCategory] = None):
        try:
            engine._state(pid)
        except errors.EngineError as exc:
            raise _http_error(exc) from None
        return [
            {
                "message_id": m.message_id,
                "participant_scope": m.participant_scope,
                "category": m.category.value,
                "text": m.text,
                "created_by": m.created_by.value,
            }
            for m in engine.message_bank.messages(participant_id=pid, category=category)
        ]

    @app.get("/v1/participants/{pid}/goals", dependencies=guarded)
    def goals(pid: str):
        try:
            book = engine._state(pid).engagement
        except errors.EngineError as exc:
            raise _http_error(exc) from None
        return [
            {
                "goal_id": g.goal_id,
                "parent": g.parent,
                "level": g.level.value,
                "title": g.title,
                "status": g.status.value,
            }
            for g in book.goals.values()
        ]

    @app.get("/v1/participants/{pid}/activities", dependencies=guarded)
    def activities(pid: str):
        try:
            book = engine._state(pid).engagement
        except errors.EngineError as exc:
            raise _http_error(exc) from None
        return [
            {
                "activity_id": a.activity_id,
                "title": a.title,
                "anticipated_pleasure": a.anticipated_pleasure,
                "experienced_pleasure": a.experienced_pleasure,
                "status": a.status.value,
            }
            for a in book.activities.values()
        ]

    @app.get("/v1/participants/{pid}/awards", dependencies=guarded)
    def awards(pid: str):
        try:
            ledger = engine._state(pid).engagement.ledger
        except errors.EngineError as exc:
            raise _http_error(exc) from None
        return {
            "total": ledger.total,
            "entries": [
                {
                    "earned_at": format_iso(e.earned_at),
                    "source": e.source.value,
                    "source_id": e.source_id,
                    "diamonds": e.diamonds,
                }
                for e in ledger.entries
            ],
        }

    @app.get("/v1/participants/{pid}/report", dependencies=guarded)
    def report(pid: str):
        try:
            return report_to_dict(engine.participant_report(pid))
        except errors.EngineError as exc:
            raise _http_error(exc) from None

    @app.post("/v1/admin/tick", dependencies=guarded)
    def tick(body: TickBody):
        with lock:
            return engine.process_tick(parse_iso(body.now))

    if wall_clock:
        interval = engine.config.processing.processing_interval_min * 60

        def ticker() -> None:
            while True:
                time.sleep(interval)
                with lock:
                    engine.process_tick(int(time.time()))

        threading.Thread(target=ticker, daemon=True).start()

    return app
