"""Per-session orchestration of the interactive alignment loop.

A session moves AWAITING_PROMPT -> GRAPH_REVIEW -> ... -> GENERATED and
back: each prompt runs intent tracking, triple extraction, and
simplification; during review the user edits the graph node-by-node or
through natural-language instructions; confirmation conditions code
generation on the exact serialized triple. Every committed transition is
persisted through the store, and the current view is always exactly
simplify(current triple, latest focus).

The tracker owns the intent tree: an extracted triple's tree is replaced
by the tracked one (first round excepted, where extraction bootstraps the
tree), and mapping entries naming merged-away or unknown intents are
re-homed to the survivor or the root.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from ..errors import (
    ExtractionFailed,
    GatewayError,
    InvalidEdit,
    InvalidState,
    InvalidTripleOutput,
    MalformedDocument,
    UnknownIntentId,
    UnknownSession,
    UnparseableProposal,
)
from ..extractor import ExtractionRecord, extract_student, extract_teacher, reconcile_ids
from ..gateway import Backends, Role, render_prompt, strip_fences
from ..model import (
    EdgeKind,
    GraphDelta,
    IntentNode,
    IntentTree,
    MappingEntry,
    TaskEdge,
    TaskNode,
    TaskOrigin,
    Triple,
    UnderstandingGraph,
    delta_to_doc,
    diff_graphs,
    dumps_triple,
    graph_to_doc,
    resolve_ownership,
    triple_to_doc,
    validate_triple,
)
from ..model.validate import validate_graph
from ..simplify import SimplifiedView, simplify, view_to_doc
from ..tracker import apply_updates, merge_log, propose_updates
from .store import SessionStore

EMPTY_GRAPH = UnderstandingGraph(nodes={}, edges=frozenset())


class SessionStatus(str, Enum):
    AWAITING_PROMPT = "AWAITING_PROMPT"
    GRAPH_REVIEW = "GRAPH_REVIEW"
    GENERATED = "GENERATED"


class EditOp(str, Enum):
    ADD_NODE = "ADD_NODE"
    DELETE_NODE = "DELETE_NODE"
    EDIT_LABEL = "EDIT_LABEL"
    ADD_EDGE = "ADD_EDGE"
    DELETE_EDGE = "DELETE_EDGE"

STRUCTURAL_OPS = {EditOp.ADD_NODE, EditOp.DELETE_NODE, EditOp.ADD_EDGE, EditOp.DELETE_EDGE}


@dataclass(frozen=True)
class NodeEdit:
    op: EditOp
    node: Optional[TaskNode] = None      # ADD_NODE
    node_id: Optional[str] = None        # DELETE_NODE / EDIT_LABEL
    label: Optional[str] = None          # EDIT_LABEL
    detail: Optional[str] = None         # EDIT_LABEL (optional)
    edge: Optional[TaskEdge] = None      # ADD_EDGE / DELETE_EDGE


def node_edit_from_doc(doc: dict[str, Any]) -> NodeEdit:
    try:
        op = EditOp(doc["op"])
    except (KeyError, ValueError) as exc:
        raise InvalidEdit(f"bad edit op in {doc!r}: {exc}") from exc
    node = None
    if doc.get("node") is not None:
        n = doc["node"]
        node = TaskNode(id=n.get("id") or "", label=n.get("label", ""),
                        detail=n.get("detail"),
                        origin=TaskOrigin(n.get("origin", "USER_ADDED")))
    edge = None
    if doc.get("edge") is not None:
        e = doc["edge"]
        try:
            edge = TaskEdge(src=e["src"], dst=e["dst"],
                            kind=EdgeKind(e.get("kind", "DEPENDENCY")))
        except (KeyError, ValueError) as exc:
            raise InvalidEdit(f"bad edge in {doc!r}: {exc}") from exc
    return NodeEdit(op=op, node=node, node_id=doc.get("id"),
                    label=doc.get("label"), detail=doc.get("detail"), edge=edge)


@dataclass
class Session:
    id: str
    status: SessionStatus = SessionStatus.AWAITING_PROMPT
    triple: Optional[Triple] = None
    view: Optional[SimplifiedView] = None
    focus: frozenset[str] = frozenset()
    base_graph: Optional[UnderstandingGraph] = None   # graph at last confirm/round start
    transcript: list[dict[str, Any]] = field(default_factory=list)
    seq: int = 0    # last committed event sequence number

    @property
    def round(self) -> int:
        return self.triple.round if self.triple else 0

    @property
    def pending_delta(self) -> Optional[GraphDelta]:
        """Applied-but-unconfirmed changes, relative to the round's base graph."""
        if self.triple is None or self.base_graph is None:
            return None
        delta = diff_graphs(self.base_graph, self.triple.graph)
        return None if delta.is_empty() else delta

    def to_doc(self) -> dict[str, Any]:
        pending = self.pending_delta
        return {
            "id": self.id,
            "status": self.status.value,
            "round": self.round,
            "triple": triple_to_doc(self.triple) if self.triple else None,
            "view": view_to_doc(self.view) if self.view else None,
            "focus": sorted(self.focus),
            "base_graph": graph_to_doc(self.base_graph) if self.base_graph else None,
            "pending_delta": delta_to_doc(pending) if pending else None,
            "transcript": list(self.transcript),
        }


class SessionService:
    """Session registry; one writer per session (per-session locks)."""

    def __init__(self, backends: Backends, store: SessionStore,
                 notify: Optional[Callable[[str, str, int, str], None]] = None):
        self.backends = backends
        self.store = store
        self._notify = notify or (lambda *args: None)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        for session_id in store.list_ids():
            try:
                self._sessions[session_id] = self._load(session_id)
                self._locks[session_id] = threading.Lock()
            except UnknownSession:
                continue

    # -- lifecycle ----------------------------------------------------------

    def create_session(self, session_id: Optional[str] = None) -> Session:
        session = Session(id=session_id or uuid.uuid4().hex[:12])
        with self._registry_lock:
            if session.id in self._sessions:
                raise InvalidEdit(f"session {session.id!r} already exists")
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        self._commit(session, "created")
        return session

    def get_session(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(f"unknown session {session_id!r}") from None

    def get_state(self, session_id: str) -> dict[str, Any]:
        return self.get_session(session_id).to_doc()

    def _lock(self, session_id: str) -> threading.Lock:
        self.get_session(session_id)
        return self._locks[session_id]

    # -- transitions ----------------------------------------------------------

    def submit_prompt(self, session_id: str, prompt: str) -> dict[str, Any]:
        with self._lock(session_id):
            session = self.get_session(session_id)
            self._require_status(session, SessionStatus.AWAITING_PROMPT,
                                 SessionStatus.GENERATED)
            if not prompt or not prompt.strip():
                raise MalformedDocument("prompt must be non-empty")

            if session.triple is None:
                triple, focus = self._first_round(prompt)
                base_graph = EMPTY_GRAPH
            else:
                base_graph = session.triple.graph
                triple, focus = self._next_round(session, prompt)

            delta = diff_graphs(base_graph, triple.graph)
            view = simplify(triple, focus)
            session.triple = triple
            session.view = view
            session.focus = focus
            session.base_graph = base_graph
            session.status = SessionStatus.GRAPH_REVIEW
            session.transcript.append({"round": triple.round, "kind": "prompt",
                                       "text": prompt})
            self._commit(session, "prompt_submitted")
            return {
                "triple": triple_to_doc(triple),
                "view": view_to_doc(view),
                "graph_delta": delta_to_doc(delta),
                "focus": sorted(focus),
            }

    def apply_node_edits(self, session_id: str, edits: list[NodeEdit]) -> dict[str, Any]:
        with self._lock(session_id):
            session = self.get_session(session_id)
            self._require_status(session, SessionStatus.GRAPH_REVIEW)
            assert session.triple is not None
            triple = _apply_edits(session.triple, edits, session.focus)
            structural = any(edit.op in STRUCTURAL_OPS for edit in edits)
            session.triple = triple
            if structural:
                session.view = simplify(triple, session.focus)
            elif session.view is not None:
                session.view = _refresh_labels(session.view, triple)
            self._commit(session, "edits_applied")
            return {"triple": triple_to_doc(triple),
                    "view": view_to_doc(session.view)}

    def modify_graph_nl(self, session_id: str, instruction: str) -> dict[str, Any]:
        with self._lock(session_id):
            session = self.get_session(session_id)
            self._require_status(session, SessionStatus.GRAPH_REVIEW)
            assert session.triple is not None
            current = session.triple
            request = render_prompt("modify_graph", instruction=instruction,
                                    triple=dumps_triple(current),
                                    round=str(current.round))
            triple = self._request_modified_triple(request, current)
            delta = diff_graphs(current.graph, triple.graph)
            triple = _force_origin(triple, delta.added_nodes, TaskOrigin.NL_MODIFIED)

            session.triple = triple
            if not delta.is_empty():
                changed = delta.changed_node_ids()
                focus = frozenset(triple.mapping.owner[nid] for nid in changed
                                  if nid in triple.mapping.owner)
                session.focus = focus
                session.view = simplify(triple, focus)
            self._commit(session, "nl_modified")
            return {"triple": triple_to_doc(triple),
                    "view": view_to_doc(session.view),
                    "graph_delta": delta_to_doc(delta)}

    def confirm_graph(self, session_id: str) -> dict[str, Any]:
        with self._lock(session_id):
            session = self.get_session(session_id)
            self._require_status(session, SessionStatus.GRAPH_REVIEW,
                                 SessionStatus.GENERATED)
            assert session.triple is not None
            history = _history_text(session.transcript)
            request = render_prompt("generate_code", history=history,
                                    triple=dumps_triple(session.triple))
            exchange = self.backends.chat(Role.CONVERSATIONAL,
                                          [{"role": "user", "content": request}])
            session.transcript.append({"round": session.triple.round, "kind": "code",
                                       "text": exchange.response})
            session.status = SessionStatus.GENERATED
            session.base_graph = session.triple.graph   # pending drained
            self._commit(session, "confirmed")
            return {"code": exchange.response}

    def focus_intent(self, session_id: str, intent_id: str) -> dict[str, Any]:
        with self._lock(session_id):
            session = self.get_session(session_id)
            if session.triple is None:
                raise InvalidState("session has no triple to focus yet")
            if intent_id not in session.triple.intent_tree.nodes:
                raise UnknownIntentId(f"unknown intent id {intent_id!r}")
            focus = frozenset({intent_id})
            session.focus = focus
            session.view = simplify(session.triple, focus)
            self._commit(session, "focused")
            return {"view": view_to_doc(session.view)}

    # -- internals ------------------------------------------------------------

    def _first_round(self, prompt: str) -> tuple[Triple, frozenset[str]]:
        """Bootstrap: the extracted triple defines the initial tree."""
        seed_tree = IntentTree(
            root="i0",
            nodes={"i0": IntentNode(id="i0", text=prompt.strip()[:200])},
            version=0)
        prev = Triple(intent_tree=seed_tree, graph=EMPTY_GRAPH,
                      mapping=resolve_ownership(seed_tree, EMPTY_GRAPH, ()), round=0)
        record = self._extract(prompt, prev)
        return record.triple, frozenset(record.triple.intent_tree.nodes)

    def _next_round(self, session: Session,
                    prompt: str) -> tuple[Triple, frozenset[str]]:
        prev = session.triple
        assert prev is not None
        try:
            updates = propose_updates(prev.intent_tree, prompt, self.backends)
        except UnparseableProposal as exc:
            raise ExtractionFailed(f"intent proposal failed: {exc}") from exc
        new_tree, focus = apply_updates(prev.intent_tree, updates)
        absorbed = merge_log(prev.intent_tree, updates)
        record = self._extract(prompt, prev)
        triple = _merge_tracked_tree(record.triple, new_tree, absorbed)
        return triple, focus

    def _extract(self, prompt: str, prev: Triple) -> ExtractionRecord:
        try:
            if self.backends.has_role(Role.STUDENT):
                return extract_student(prompt, prev, self.backends)
            return extract_teacher(prompt, prev, self.backends)
        except (GatewayError, InvalidTripleOutput) as exc:
            raise ExtractionFailed(str(exc)) from exc

    def _request_modified_triple(self, request: str, current: Triple) -> Triple:
        messages = [{"role": "user", "content": request}]
        last_error: Exception | None = None
        for attempt in range(2):
            exchange = self.backends.chat(Role.EXTRACTOR, messages)
            try:
                triple = validate_triple(strip_fences(exchange.response))
                if triple.round != current.round:
                    raise MalformedDocument(
                        f"modification must keep round {current.round}")
                triple = reconcile_ids(triple, current)
                return _merge_tracked_tree(triple, current.intent_tree, {})
            except MalformedDocument as exc:
                last_error = exc
                messages = messages + [
                    {"role": "assistant", "content": exchange.response},
                    {"role": "user", "content":
                        f"That document was rejected: {exc}. "
                        "Reply with a corrected triple document only."},
                ]
        raise InvalidTripleOutput(f"modify output invalid after retry: {last_error}")

    def _require_status(self, session: Session, *allowed: SessionStatus) -> None:
        if session.status not in allowed:
            raise InvalidState(
                f"operation not allowed in {session.status.value}; "
                f"needs one of {[s.value for s in allowed]}")

    def _commit(self, session: Session, kind: str) -> None:
        session.seq += 1
        self.store.commit(session.id, kind, session.seq, session.to_doc())
        self._notify(session.id, kind, session.seq, session.status.value)

    def _load(self, session_id: str) -> Session:
        seq, doc = self.store.load(session_id)
        triple = validate_triple(doc["triple"]) if doc.get("triple") else None
        focus = frozenset(doc.get("focus", []))
        view = simplify(triple, focus) if triple is not None else None
        base = validate_graph(doc["base_graph"]) if doc.get("base_graph") else None
        return Session(
            id=doc["id"],
            status=SessionStatus(doc["status"]),
            triple=triple,
            view=view,
            focus=focus,
            base_graph=base,
            transcript=list(doc.get("transcript", [])),
            seq=seq,
        )


# --- pure helpers -------------------------------------------------------------

def _apply_edits(triple: Triple, edits: list[NodeEdit],
                 focus: frozenset[str]) -> Triple:
    """All-or-nothing node edits; raises InvalidEdit without mutating."""
    nodes = dict(triple.graph.nodes)
    edges = set(triple.graph.edges)
    claims = {entry.intent_id: set(entry.task_node_ids)
              for entry in triple.mapping.entries}
    focus_owner = next(iter(focus)) if len(focus) == 1 else triple.intent_tree.root
    fresh_serial = 0

    for edit in edits:
        if edit.op == EditOp.ADD_NODE:
            if edit.node is None or not edit.node.label.strip():
                raise InvalidEdit("ADD_NODE needs a node with a non-empty label")
            node = edit.node
            if not node.id:
                while True:
                    fresh_serial += 1
                    candidate = f"g{triple.round}.{fresh_serial}"
                    if candidate not in nodes:
                        break
                node = TaskNode(id=candidate, label=node.label, detail=node.detail,
                                origin=TaskOrigin.USER_ADDED)
            if node.id in nodes:
                raise InvalidEdit(f"task node {node.id!r} already exists")
            nodes[node.id] = node
            owner = focus_owner if focus_owner in triple.intent_tree.nodes \
                else triple.intent_tree.root
            claims.setdefault(owner, set()).add(node.id)
        elif edit.op == EditOp.DELETE_NODE:
            if edit.node_id not in nodes:
                raise InvalidEdit(f"cannot delete unknown node {edit.node_id!r}")
            del nodes[edit.node_id]
            edges = {e for e in edges if edit.node_id not in (e.src, e.dst)}
            for task_ids in claims.values():
                task_ids.discard(edit.node_id)
        elif edit.op == EditOp.EDIT_LABEL:
            if edit.node_id not in nodes:
                raise InvalidEdit(f"cannot relabel unknown node {edit.node_id!r}")
            if not edit.label or not edit.label.strip():
                raise InvalidEdit("EDIT_LABEL needs a non-empty label")
            old = nodes[edit.node_id]
            nodes[edit.node_id] = TaskNode(
                id=old.id, label=edit.label,
                detail=edit.detail if edit.detail is not None else old.detail,
                origin=old.origin)
        elif edit.op == EditOp.ADD_EDGE:
            if edit.edge is None:
                raise InvalidEdit("ADD_EDGE needs an edge")
            edge = edit.edge
            if edge.src == edge.dst:
                raise InvalidEdit("self-loops are not allowed")
            if edge.src not in nodes or edge.dst not in nodes:
                raise InvalidEdit(f"edge {edge.src!r}->{edge.dst!r} references a missing node")
            if edge in edges:
                raise InvalidEdit(f"duplicate edge {edge.src!r}->{edge.dst!r}")
            edges.add(edge)
        elif edit.op == EditOp.DELETE_EDGE:
            if edit.edge is None or edit.edge not in edges:
                raise InvalidEdit("cannot delete an edge that is not in the graph")
            edges.discard(edit.edge)

    graph = UnderstandingGraph(nodes=nodes, edges=frozenset(edges))
    entries = tuple(MappingEntry(intent_id=iid, task_node_ids=frozenset(tids))
                    for iid, tids in sorted(claims.items()) if tids)
    mapping = resolve_ownership(triple.intent_tree, graph, entries)
    return Triple(intent_tree=triple.intent_tree, graph=graph,
                  mapping=mapping, round=triple.round)


def _merge_tracked_tree(extracted: Triple, tree: IntentTree,
                        absorbed: dict[str, str]) -> Triple:
    """The tracker's tree wins; re-home mapping claims accordingly.

    Claims naming a merged-away intent follow it to the survivor; claims
    naming an intent the tracker does not know about fall back to the
    root.
    """
    def rehome(intent_id: str) -> str:
        intent_id = absorbed.get(intent_id, intent_id)
        return intent_id if intent_id in tree.nodes else tree.root

    claims: dict[str, set[str]] = {}
    for entry in extracted.mapping.entries:
        claims.setdefault(rehome(entry.intent_id), set()).update(entry.task_node_ids)
    entries = tuple(MappingEntry(intent_id=iid, task_node_ids=frozenset(tids))
                    for iid, tids in sorted(claims.items()) if tids)
    mapping = resolve_ownership(tree, extracted.graph, entries)
    return Triple(intent_tree=tree, graph=extracted.graph,
                  mapping=mapping, round=tree.version)


def _force_origin(triple: Triple, nodes: tuple[TaskNode, ...],
                  origin: TaskOrigin) -> Triple:
    if not nodes:
        return triple
    new_nodes = dict(triple.graph.nodes)
    for node in nodes:
        current = new_nodes[node.id]
        new_nodes[node.id] = TaskNode(id=current.id, label=current.label,
                                      detail=current.detail, origin=origin)
    graph = UnderstandingGraph(nodes=new_nodes, edges=triple.graph.edges)
    mapping = resolve_ownership(triple.intent_tree, graph, triple.mapping.entries)
    return Triple(intent_tree=triple.intent_tree, graph=graph,
                  mapping=mapping, round=triple.round)


def _refresh_labels(view: SimplifiedView, triple: Triple) -> SimplifiedView:
    """Push relabels into an existing view without re-running the simplifier."""
    task_nodes = {tid: triple.graph.nodes[tid] for tid in view.task_nodes}
    return SimplifiedView(task_nodes=task_nodes, supernodes=view.supernodes,
                          edges=view.edges, highlight=view.highlight,
                          collapse=view.collapse)


def _history_text(transcript: list[dict[str, Any]]) -> str:
    """User prompts only: the confirmed triple carries the task state, and
    leaving generated code out keeps re-confirmation's conditioning input
    identical when nothing changed."""
    lines = [f"user: {entry['text']}" for entry in transcript
             if entry["kind"] == "prompt"]
    return "\n".join(lines) if lines else "(no prior conversation)"
