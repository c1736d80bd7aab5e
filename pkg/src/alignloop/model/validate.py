"""Triple document validation and ownership resolution.

validate_triple is the single entry point every other module uses to turn
untrusted structured documents (LLM output, HTTP bodies, files) into
Triple values. It enforces all structural invariants and resolves
overlapping mapping claims deterministically.
"""

from __future__ import annotations

import json
from typing import Any

from ..errors import (
    CycleInIntentTree,
    DanglingReference,
    DuplicateId,
    MalformedDocument,
)
from .serialize import (
    intent_node_from_doc,
    mapping_entry_from_doc,
    task_edge_from_doc,
    task_node_from_doc,
)
from .types import (
    IntentNode,
    IntentTree,
    Mapping,
    MappingEntry,
    TaskEdge,
    Triple,
    UnderstandingGraph,
)


def validate_triple(raw: Any) -> Triple:
    """Parse and validate a triple document.

    Accepts a JSON string or an already-parsed dict. Raises
    MalformedDocument (or a subclass: DanglingReference,
    CycleInIntentTree, DuplicateId) on any invariant violation.
    """
    doc = _as_dict(raw)
    for key in ("intent_tree", "graph", "mapping"):
        if key not in doc:
            raise MalformedDocument(f"missing top-level key {key!r}")

    round_no = doc.get("round", 0)
    if not isinstance(round_no, int) or round_no < 0:
        raise MalformedDocument(f"round must be a non-negative integer, got {round_no!r}")

    tree = _validate_tree(doc["intent_tree"], round_no)
    graph = _validate_graph(doc["graph"])
    mapping = _validate_mapping(doc["mapping"], tree, graph)
    return Triple(intent_tree=tree, graph=graph, mapping=mapping, round=round_no)


def validate_intent_tree(raw: Any, expected_version: int = 0) -> IntentTree:
    """Validate a standalone intent-tree document (no graph or mapping)."""
    doc = _as_dict(raw)
    return _validate_tree(doc, expected_version)


def validate_graph(raw: Any) -> UnderstandingGraph:
    """Validate a standalone graph document."""
    doc = _as_dict(raw)
    return _validate_graph(doc)


def resolve_ownership(tree: IntentTree, graph: UnderstandingGraph,
                      entries: tuple[MappingEntry, ...]) -> Mapping:
    """Assign each task node exactly one owning intent node.

    A node claimed by several intents goes to the claimant seen first in
    preorder (root-first, child-order) traversal; later claims are kept
    as read-only referenced_by links. Unclaimed nodes belong to the root.
    The result depends only on the tree shape and the claims, never on
    collection iteration order.
    """
    claims: dict[str, frozenset[str]] = {}
    for entry in entries:
        merged = claims.get(entry.intent_id, frozenset()) | entry.task_node_ids
        claims[entry.intent_id] = merged
    # entries are stored sorted so the canonical serialized form is a
    # fixed point: validate(serialize(t)) == t.
    entries = tuple(
        MappingEntry(intent_id=i, task_node_ids=claims[i]) for i in sorted(claims)
    )

    owner: dict[str, str] = {}
    referenced_by: dict[str, set[str]] = {}
    for intent_id in tree.preorder():
        for task_id in sorted(claims.get(intent_id, ())):
            if task_id not in owner:
                owner[task_id] = intent_id
            elif owner[task_id] != intent_id:
                referenced_by.setdefault(task_id, set()).add(intent_id)
    for task_id in graph.nodes:
        owner.setdefault(task_id, tree.root)

    return Mapping(
        entries=entries,
        owner=owner,
        referenced_by={k: frozenset(v) for k, v in referenced_by.items()},
    )


def _as_dict(raw: Any) -> dict[str, Any]:
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedDocument(f"expected a JSON object, got {type(raw).__name__}")
    return raw


def _validate_tree(doc: Any, round_no: int) -> IntentTree:
    if not isinstance(doc, dict):
        raise MalformedDocument("intent_tree must be an object")
    try:
        node_docs = doc["nodes"]
        root = doc["root"]
    except KeyError as exc:
        raise MalformedDocument(f"intent_tree missing key {exc}") from exc
    version = doc.get("version", round_no)
    if not isinstance(version, int) or version < 0:
        raise MalformedDocument(f"version must be a non-negative integer, got {version!r}")
    if version != round_no:
        raise MalformedDocument(
            f"intent_tree.version ({version}) must equal round ({round_no})")

    nodes: dict[str, IntentNode] = {}
    for node_doc in node_docs:
        node = _parse_intent_node(node_doc)
        if node.id in nodes:
            raise DuplicateId(f"intent node id {node.id!r} appears twice")
        nodes[node.id] = node

    if root not in nodes:
        raise DanglingReference(f"root {root!r} is not a node in the tree")

    parent: dict[str, str] = {}
    for node in nodes.values():
        seen_children: set[str] = set()
        for child in node.children:
            if child in seen_children:
                raise DuplicateId(f"node {node.id!r} lists child {child!r} twice")
            seen_children.add(child)
            if child not in nodes:
                raise DanglingReference(f"node {node.id!r} references missing child {child!r}")
            if child in parent:
                raise CycleInIntentTree(
                    f"node {child!r} has two parents ({parent[child]!r} and {node.id!r})")
            if child == root:
                raise CycleInIntentTree(f"root {root!r} cannot be a child")
            parent[child] = node.id

    reachable: set[str] = set()
    stack = [root]
    while stack:
        nid = stack.pop()
        if nid in reachable:
            raise CycleInIntentTree(f"cycle through node {nid!r}")
        reachable.add(nid)
        stack.extend(nodes[nid].children)
    if reachable != set(nodes):
        stranded = sorted(set(nodes) - reachable)
        raise CycleInIntentTree(f"nodes not reachable from root: {stranded}")

    return IntentTree(root=root, nodes=nodes, version=version)


def _parse_intent_node(doc: Any) -> IntentNode:
    if not isinstance(doc, dict):
        raise MalformedDocument("intent node must be an object")
    try:
        node = intent_node_from_doc(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedDocument(f"bad intent node {doc!r}: {exc}") from exc
    if not isinstance(node.id, str) or not node.id:
        raise MalformedDocument("intent node id must be a non-empty string")
    if not isinstance(node.text, str) or not node.text.strip():
        raise MalformedDocument(f"intent node {node.id!r} has empty text")
    return node


def _validate_graph(doc: Any) -> UnderstandingGraph:
    if not isinstance(doc, dict):
        raise MalformedDocument("graph must be an object")

    nodes: dict[str, Any] = {}
    for node_doc in doc.get("nodes", []):
        try:
            node = task_node_from_doc(node_doc)
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedDocument(f"bad task node {node_doc!r}: {exc}") from exc
        if not isinstance(node.id, str) or not node.id:
            raise MalformedDocument("task node id must be a non-empty string")
        if not isinstance(node.label, str) or not node.label.strip():
            raise MalformedDocument(f"task node {node.id!r} has empty label")
        if node.id in nodes:
            raise DuplicateId(f"task node id {node.id!r} appears twice")
        nodes[node.id] = node

    edges: set[TaskEdge] = set()
    for edge_doc in doc.get("edges", []):
        try:
            edge = task_edge_from_doc(edge_doc)
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedDocument(f"bad edge {edge_doc!r}: {exc}") from exc
        if edge.src == edge.dst:
            raise MalformedDocument(f"self-loop on {edge.src!r}")
        for endpoint in (edge.src, edge.dst):
            if endpoint not in nodes:
                raise DanglingReference(f"edge endpoint {endpoint!r} not in graph")
        if edge in edges:
            raise DuplicateId(f"duplicate edge {edge.src!r}->{edge.dst!r} ({edge.kind.value})")
        edges.add(edge)

    return UnderstandingGraph(nodes=nodes, edges=frozenset(edges))


def _validate_mapping(doc: Any, tree: IntentTree, graph: UnderstandingGraph) -> Mapping:
    if not isinstance(doc, dict):
        raise MalformedDocument("mapping must be an object")

    entries: list[Any] = []
    seen_intents: set[str] = set()
    for entry_doc in doc.get("entries", []):
        try:
            entry = mapping_entry_from_doc(entry_doc)
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedDocument(f"bad mapping entry {entry_doc!r}: {exc}") from exc
        if not entry.task_node_ids:
            raise MalformedDocument(f"mapping entry for {entry.intent_id!r} is empty")
        if entry.intent_id not in tree.nodes:
            raise DanglingReference(f"mapping references missing intent {entry.intent_id!r}")
        if entry.intent_id in seen_intents:
            raise DuplicateId(f"two mapping entries for intent {entry.intent_id!r}")
        seen_intents.add(entry.intent_id)
        for task_id in entry.task_node_ids:
            if task_id not in graph.nodes:
                raise DanglingReference(f"mapping references missing task node {task_id!r}")
        entries.append(entry)

    return resolve_ownership(tree, graph, tuple(entries))
