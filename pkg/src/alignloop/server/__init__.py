"""Interactive session server: state machine, persistence, HTTP surface."""

from .http import EventHub, build_app
from .service import (
    EditOp,
    NodeEdit,
    Session,
    SessionService,
    SessionStatus,
    node_edit_from_doc,
)
from .store import SessionStore

__all__ = [
    "EditOp",
    "EventHub",
    "NodeEdit",
    "Session",
    "SessionService",
    "SessionStatus",
    "SessionStore",
    "build_app",
    "node_edit_from_doc",
]
