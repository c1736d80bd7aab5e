"""Canonical serialized form of triples and related documents.

The wire unit is a JSON document with top-level keys `intent_tree`,
`graph`, `mapping`, `round`. Canonical text is compact JSON with sorted
keys and collections sorted by id, so serializing the same triple always
yields the same bytes (the generation-conditioning check relies on this).
A JSON Schema for the document lives in alignloop/schema/triple.schema.json.
"""

from __future__ import annotations

import json
from typing import Any

from .types import (
    EdgeKind,
    IntentNode,
    IntentState,
    IntentTree,
    Mapping,
    MappingEntry,
    TaskEdge,
    TaskNode,
    TaskOrigin,
    Triple,
    UnderstandingGraph,
)


def intent_tree_to_doc(tree: IntentTree) -> dict[str, Any]:
    return {
        "root": tree.root,
        "nodes": [
            {
                "id": n.id,
                "text": n.text,
                "state": n.state.value,
                "children": list(n.children),
            }
            for n in sorted(tree.nodes.values(), key=lambda n: n.id)
        ],
        "version": tree.version,
    }


def graph_to_doc(graph: UnderstandingGraph) -> dict[str, Any]:
    return {
        "nodes": [
            {
                "id": n.id,
                "label": n.label,
                "detail": n.detail,
                "origin": n.origin.value,
            }
            for n in sorted(graph.nodes.values(), key=lambda n: n.id)
        ],
        "edges": [
            {"src": e.src, "dst": e.dst, "kind": e.kind.value}
            for e in sorted(graph.edges, key=lambda e: (e.src, e.dst, e.kind.value))
        ],
    }


def mapping_to_doc(mapping: Mapping) -> dict[str, Any]:
    return {
        "entries": [
            {"intent_id": e.intent_id, "task_node_ids": sorted(e.task_node_ids)}
            for e in sorted(mapping.entries, key=lambda e: e.intent_id)
        ],
    }


def triple_to_doc(triple: Triple) -> dict[str, Any]:
    return {
        "intent_tree": intent_tree_to_doc(triple.intent_tree),
        "graph": graph_to_doc(triple.graph),
        "mapping": mapping_to_doc(triple.mapping),
        "round": triple.round,
    }


def dumps_triple(triple: Triple) -> str:
    """Canonical text form: compact, sorted keys, sorted collections."""
    return json.dumps(triple_to_doc(triple), sort_keys=True, separators=(",", ":"))


def dumps_doc(doc: Any) -> str:
    """Canonical text for any already-shaped document."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


# --- raw-document constructors (no validation; see validate.py) ------------

def intent_node_from_doc(doc: dict[str, Any]) -> IntentNode:
    return IntentNode(
        id=doc["id"],
        text=doc["text"],
        state=IntentState(doc.get("state", "NOT_COMPLETED")),
        children=tuple(doc.get("children", [])),
    )


def task_node_from_doc(doc: dict[str, Any]) -> TaskNode:
    return TaskNode(
        id=doc["id"],
        label=doc["label"],
        detail=doc.get("detail"),
        origin=TaskOrigin(doc.get("origin", "EXTRACTED")),
    )


def task_edge_from_doc(doc: dict[str, Any]) -> TaskEdge:
    return TaskEdge(src=doc["src"], dst=doc["dst"], kind=EdgeKind(doc.get("kind", "DEPENDENCY")))


def mapping_entry_from_doc(doc: dict[str, Any]) -> MappingEntry:
    return MappingEntry(
        intent_id=doc["intent_id"],
        task_node_ids=frozenset(doc["task_node_ids"]),
    )
