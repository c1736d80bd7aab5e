"""HTTP surface for the session service, versioned under /v1/.

Request and response bodies are the canonical document forms; a WebSocket
at /v1/sessions/{id}/events streams state-change notifications so the UI
can refresh without polling.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from typing import Any, Optional

from fastapi import Body, FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from ..errors import (
    AlignLoopError,
    ExtractionFailed,
    GatewayError,
    InvalidEdit,
    InvalidFocus,
    InvalidState,
    InvalidTripleOutput,
    MalformedDocument,
    NotASupernode,
    UnknownIntentId,
    UnknownSession,
)
from .service import SessionService, node_edit_from_doc

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (UnknownSession, 404),
    (InvalidState, 409),
    (GatewayError, 502),
    (ExtractionFailed, 502),
    (InvalidTripleOutput, 502),
    (MalformedDocument, 400),
    (InvalidEdit, 400),
    (InvalidFocus, 400),
    (UnknownIntentId, 400),
    (NotASupernode, 400),
]


class EventHub:
    """Fan-out buffer for state-change notifications, safe across threads."""

    def __init__(self, keep: int = 256):
        self._events: dict[str, list[dict[str, Any]]] = defaultdict(list)
        self._cond = threading.Condition()
        self._keep = keep

    def publish(self, session_id: str, kind: str, seq: int, status: str) -> None:
        with self._cond:
            events = self._events[session_id]
            events.append({"session_id": session_id, "event": kind,
                           "seq": seq, "status": status})
            del events[:-self._keep]
            self._cond.notify_all()

    def wait_for(self, session_id: str, after_seq: int,
                 timeout: float) -> list[dict[str, Any]]:
        with self._cond:
            self._cond.wait_for(
                lambda: any(e["seq"] > after_seq for e in self._events[session_id]),
                timeout=timeout)
            return [e for e in self._events[session_id] if e["seq"] > after_seq]


def build_app(service: SessionService, hub: Optional[EventHub] = None) -> FastAPI:
    app = FastAPI(title="alignloop session server", version="1")
    hub = hub or EventHub()
    service._notify = hub.publish

    @app.exception_handler(AlignLoopError)
    async def handle_errors(request, exc: AlignLoopError):
        for error_type, status in _STATUS_BY_ERROR:
            if isinstance(exc, error_type):
                return JSONResponse(status_code=status, content={
                    "error": type(exc).__name__, "message": str(exc)})
        return JSONResponse(status_code=500, content={
            "error": type(exc).__name__, "message": str(exc)})

    @app.post("/v1/sessions")
    def create_session(payload: dict = Body(default={})) -> dict:
        session = service.create_session(payload.get("session_id"))
        return {"session_id": session.id, "state": session.to_doc()}

    @app.get("/v1/sessions/{session_id}")
    def get_state(session_id: str) -> dict:
        return service.get_state(session_id)

    @app.post("/v1/sessions/{session_id}/prompt")
    def submit_prompt(session_id: str, payload: dict = Body(...)) -> dict:
        return service.submit_prompt(session_id, payload.get("prompt", ""))

    @app.post("/v1/sessions/{session_id}/edits")
    def apply_edits(session_id: str, payload: dict = Body(...)) -> dict:
        edits = [node_edit_from_doc(doc) for doc in payload.get("edits", [])]
        return service.apply_node_edits(session_id, edits)

    @app.post("/v1/sessions/{session_id}/modify")
    def modify_nl(session_id: str, payload: dict = Body(...)) -> dict:
        return service.modify_graph_nl(session_id, payload.get("instruction", ""))

    @app.post("/v1/sessions/{session_id}/confirm")
    def confirm(session_id: str) -> dict:
        return service.confirm_graph(session_id)

    @app.post("/v1/sessions/{session_id}/focus")
    def focus(session_id: str, payload: dict = Body(...)) -> dict:
        return service.focus_intent(session_id, payload.get("intent_id", ""))

    @app.websocket("/v1/sessions/{session_id}/events")
    async def events(websocket: WebSocket, session_id: str):
        await websocket.accept()
        last_seq = int(websocket.query_params.get("after", 0))
        try:
            while True:
                fresh = await run_in_threadpool(hub.wait_for, session_id, last_seq, 0.25)
                for event in fresh:
                    await websocket.send_json(event)
                    last_seq = max(last_seq, event["seq"])
        except WebSocketDisconnect:
            pass

    return app
