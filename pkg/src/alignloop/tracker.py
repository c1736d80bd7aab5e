"""Intent tree maintenance across dialogue rounds.

The tree evolves through a closed vocabulary of typed updates (refine,
add, merge, reparent, mark-state, noop) applied sequentially. Everything
here is a pure function over immutable trees; the only nondeterminism in
the system lives in the model's proposal step (propose_updates), which is
validated and repaired before anything touches a tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Sequence

from .errors import (
    ConflictingUpdates,
    CycleWouldForm,
    MalformedDocument,
    UnknownIntentId,
    UnparseableProposal,
)
from .gateway import Backends, Role, render_prompt, strip_fences
from .model import IntentNode, IntentState, IntentTree, dumps_doc, intent_tree_to_doc

FocusSet = frozenset


class UpdateOp(str, Enum):
    REFINE = "REFINE"
    ADD = "ADD"
    MERGE = "MERGE"
    REPARENT = "REPARENT"
    MARK_STATE = "MARK_STATE"
    NOOP = "NOOP"


class Provenance(str, Enum):
    LLM_PROPOSED = "LLM_PROPOSED"
    USER_EDIT = "USER_EDIT"


@dataclass(frozen=True)
class IntentUpdate:
    op: UpdateOp
    id: Optional[str] = None              # REFINE / REPARENT / MARK_STATE
    new_text: Optional[str] = None        # REFINE
    parent_id: Optional[str] = None       # ADD
    node_id: Optional[str] = None         # ADD (omit to auto-generate)
    text: Optional[str] = None            # ADD
    id_a: Optional[str] = None            # MERGE
    id_b: Optional[str] = None            # MERGE
    merged_text: Optional[str] = None     # MERGE
    new_parent_id: Optional[str] = None   # REPARENT
    state: Optional[IntentState] = None   # MARK_STATE
    provenance: Provenance = Provenance.LLM_PROPOSED


@dataclass
class _TreeState:
    """Mutable working copy used while a batch is applied."""

    root: str
    nodes: dict[str, IntentNode]
    absorbed: dict[str, str] = field(default_factory=dict)  # merged-away -> survivor
    focus: set[str] = field(default_factory=set)
    fresh_serial: int = 0


def apply_updates(tree: IntentTree,
                  updates: Sequence[IntentUpdate]) -> tuple[IntentTree, FocusSet]:
    """Apply one round of updates sequentially.

    Returns the new tree (version bumped by one) and the focus set: ids
    created, refined, reparented, or produced by a merge. A NOOP-only
    batch still bumps the version and yields an empty focus.
    """
    state = _TreeState(root=tree.root, nodes=dict(tree.nodes))
    next_version = tree.version + 1
    for update in updates:
        _apply_one(state, update, next_version)
    new_tree = IntentTree(root=state.root, nodes=state.nodes, version=next_version)
    return new_tree, frozenset(state.focus)


def merge_log(tree: IntentTree, updates: Sequence[IntentUpdate]) -> dict[str, str]:
    """Map of merged-away intent ids to their surviving node.

    Callers that hold a mapping over the old tree use this to transfer
    claims of absorbed intents to the merge result.
    """
    state = _TreeState(root=tree.root, nodes=dict(tree.nodes))
    for update in updates:
        _apply_one(state, update, tree.version + 1)
    return dict(state.absorbed)


def _apply_one(state: _TreeState, update: IntentUpdate, version: int) -> None:
    handlers = {
        UpdateOp.REFINE: _do_refine,
        UpdateOp.ADD: _do_add,
        UpdateOp.MERGE: _do_merge,
        UpdateOp.REPARENT: _do_reparent,
        UpdateOp.MARK_STATE: _do_mark_state,
        UpdateOp.NOOP: lambda s, u, v: None,
    }
    handlers[update.op](state, update, version)


def _require(state: _TreeState, node_id: Optional[str]) -> str:
    if node_id is None:
        raise MalformedDocument("update is missing a node id")
    if node_id in state.absorbed:
        raise ConflictingUpdates(
            f"intent {node_id!r} was already merged into {state.absorbed[node_id]!r} "
            f"by an earlier update in this batch")
    if node_id not in state.nodes:
        raise UnknownIntentId(f"unknown intent id {node_id!r}")
    return node_id


def _parent_of(state: _TreeState, node_id: str) -> Optional[str]:
    for node in state.nodes.values():
        if node_id in node.children:
            return node.id
    return None


def _is_ancestor(state: _TreeState, maybe_ancestor: str, node_id: str) -> bool:
    cur = _parent_of(state, node_id)
    while cur is not None:
        if cur == maybe_ancestor:
            return True
        cur = _parent_of(state, cur)
    return False


def _fresh_id(state: _TreeState, version: int) -> str:
    while True:
        state.fresh_serial += 1
        candidate = f"i{version}.{state.fresh_serial}"
        if candidate not in state.nodes and candidate not in state.absorbed:
            return candidate


def _do_refine(state: _TreeState, update: IntentUpdate, version: int) -> None:
    nid = _require(state, update.id)
    if not update.new_text or not update.new_text.strip():
        raise MalformedDocument("REFINE needs non-empty new_text")
    node = state.nodes[nid]
    state.nodes[nid] = IntentNode(id=nid, text=update.new_text,
                                  state=node.state, children=node.children)
    state.focus.add(nid)


def _do_add(state: _TreeState, update: IntentUpdate, version: int) -> None:
    parent = _require(state, update.parent_id)
    if not update.text or not update.text.strip():
        raise MalformedDocument("ADD needs non-empty text")
    nid = update.node_id or _fresh_id(state, version)
    if nid in state.nodes or nid in state.absorbed:
        raise ConflictingUpdates(f"id {nid!r} is already taken this session")
    state.nodes[nid] = IntentNode(id=nid, text=update.text,
                                  state=update.state or IntentState.NOT_COMPLETED)
    parent_node = state.nodes[parent]
    state.nodes[parent] = IntentNode(
        id=parent, text=parent_node.text, state=parent_node.state,
        children=parent_node.children + (nid,))
    state.focus.add(nid)


def _do_merge(state: _TreeState, update: IntentUpdate, version: int) -> None:
    a = _require(state, update.id_a)
    b = _require(state, update.id_b)
    if a == b:
        raise MalformedDocument("MERGE targets must be distinct")
    if b == state.root:
        raise CycleWouldForm("the root intent cannot be absorbed by a merge")
    if _is_ancestor(state, b, a):
        raise CycleWouldForm(
            f"merging {b!r} into its descendant {a!r} would create a cycle")
    text = update.merged_text
    if not text or not text.strip():
        raise MalformedDocument("MERGE needs non-empty merged_text")

    node_a, node_b = state.nodes[a], state.nodes[b]
    # detach b from its parent, then hand its children to a
    parent_b = _parent_of(state, b)
    if parent_b is not None:
        pnode = state.nodes[parent_b]
        state.nodes[parent_b] = IntentNode(
            id=parent_b, text=pnode.text, state=pnode.state,
            children=tuple(c for c in pnode.children if c != b))
        node_a = state.nodes[a]  # parent_b may be a itself
    merged_children = node_a.children + tuple(
        c for c in node_b.children if c not in node_a.children)
    merged_state = (IntentState.COMPLETED
                    if node_a.state == node_b.state == IntentState.COMPLETED
                    else IntentState.NOT_COMPLETED)
    state.nodes[a] = IntentNode(id=a, text=text, state=merged_state,
                                children=merged_children)
    del state.nodes[b]
    state.absorbed[b] = a
    state.focus.discard(b)
    state.focus.add(a)


def _do_reparent(state: _TreeState, update: IntentUpdate, version: int) -> None:
    nid = _require(state, update.id)
    new_parent = _require(state, update.new_parent_id)
    if nid == state.root:
        raise CycleWouldForm("the root cannot be reparented")
    if nid == new_parent or _is_ancestor(state, nid, new_parent):
        raise CycleWouldForm(
            f"reparenting {nid!r} under {new_parent!r} would create a cycle")
    old_parent = _parent_of(state, nid)
    if old_parent == new_parent:
        state.focus.add(nid)
        return
    assert old_parent is not None
    pnode = state.nodes[old_parent]
    state.nodes[old_parent] = IntentNode(
        id=old_parent, text=pnode.text, state=pnode.state,
        children=tuple(c for c in pnode.children if c != nid))
    target = state.nodes[new_parent]
    state.nodes[new_parent] = IntentNode(
        id=new_parent, text=target.text, state=target.state,
        children=target.children + (nid,))
    state.focus.add(nid)


def _do_mark_state(state: _TreeState, update: IntentUpdate, version: int) -> None:
    nid = _require(state, update.id)
    if update.state is None:
        raise MalformedDocument("MARK_STATE needs a state")
    node = state.nodes[nid]
    state.nodes[nid] = IntentNode(id=nid, text=node.text,
                                  state=update.state, children=node.children)


# --- wire format ------------------------------------------------------------
# The update-list document doubles as the model's output contract and the
# UI's edit payload: {"updates": [...], "provenance": "..."}.

def updates_to_doc(updates: Sequence[IntentUpdate],
                   provenance: Provenance = Provenance.LLM_PROPOSED) -> dict[str, Any]:
    out = []
    for u in updates:
        doc: dict[str, Any] = {"op": u.op.value}
        if u.op == UpdateOp.REFINE:
            doc.update(id=u.id, new_text=u.new_text)
        elif u.op == UpdateOp.ADD:
            doc.update(parent_id=u.parent_id, text=u.text)
            if u.node_id:
                doc["node_id"] = u.node_id
        elif u.op == UpdateOp.MERGE:
            doc.update(id_a=u.id_a, id_b=u.id_b, merged_text=u.merged_text)
        elif u.op == UpdateOp.REPARENT:
            doc.update(id=u.id, new_parent_id=u.new_parent_id)
        elif u.op == UpdateOp.MARK_STATE:
            doc.update(id=u.id, state=u.state.value if u.state else None)
        out.append(doc)
    return {"updates": out, "provenance": provenance.value}


def updates_from_doc(raw: Any) -> list[IntentUpdate]:
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"update list is not valid JSON: {exc}") from exc
    if isinstance(raw, list):
        raw = {"updates": raw}
    if not isinstance(raw, dict) or "updates" not in raw:
        raise MalformedDocument("expected an object with an 'updates' list")
    try:
        provenance = Provenance(raw.get("provenance", "LLM_PROPOSED"))
    except ValueError as exc:
        raise MalformedDocument(str(exc)) from exc

    updates = []
    for doc in raw["updates"]:
        if not isinstance(doc, dict) or "op" not in doc:
            raise MalformedDocument(f"bad update entry {doc!r}")
        try:
            op = UpdateOp(doc["op"])
            state = IntentState(doc["state"]) if doc.get("state") else None
        except ValueError as exc:
            raise MalformedDocument(str(exc)) from exc
        updates.append(IntentUpdate(
            op=op,
            id=doc.get("id"),
            new_text=doc.get("new_text"),
            parent_id=doc.get("parent_id"),
            node_id=doc.get("node_id"),
            text=doc.get("text"),
            id_a=doc.get("id_a"),
            id_b=doc.get("id_b"),
            merged_text=doc.get("merged_text"),
            new_parent_id=doc.get("new_parent_id"),
            state=state,
            provenance=provenance,
        ))
    return updates


def propose_updates(tree: IntentTree, prompt: str,
                    backends: Backends) -> list[IntentUpdate]:
    """Ask the extraction backend for this round's intent updates.

    The template constrains output to the update-list document. Malformed
    or inapplicable output gets one repair retry (resending the parse or
    validation error); after that UnparseableProposal is raised.
    """
    request = render_prompt(
        "propose_updates",
        prompt=prompt,
        intent_tree=dumps_doc(intent_tree_to_doc(tree)),
    )
    messages = [{"role": "user", "content": request}]
    last_error: Exception | None = None
    for attempt in range(2):
        exchange = backends.chat(Role.EXTRACTOR, messages)
        try:
            updates = updates_from_doc(strip_fences(exchange.response))
            apply_updates(tree, updates)  # dry run: must be applicable
            return updates
        except (MalformedDocument, UnknownIntentId, CycleWouldForm,
                ConflictingUpdates) as exc:
            last_error = exc
            messages = messages + [
                {"role": "assistant", "content": exchange.response},
                {"role": "user", "content":
                    f"That update list was rejected: {exc}. "
                    "Reply with a corrected JSON update list only."},
            ]
    raise UnparseableProposal(f"proposal invalid after retry: {last_error}")

