"""Triple data model: types, canonical serialization, validation, diffs."""

from .diff import GraphDelta, apply_delta, delta_to_doc, diff_graphs
from .serialize import (
    dumps_doc,
    dumps_triple,
    graph_to_doc,
    intent_tree_to_doc,
    mapping_to_doc,
    triple_to_doc,
)
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
from .validate import resolve_ownership, validate_triple

__all__ = [
    "EdgeKind",
    "GraphDelta",
    "IntentNode",
    "IntentState",
    "IntentTree",
    "Mapping",
    "MappingEntry",
    "TaskEdge",
    "TaskNode",
    "TaskOrigin",
    "Triple",
    "UnderstandingGraph",
    "apply_delta",
    "delta_to_doc",
    "diff_graphs",
    "dumps_doc",
    "dumps_triple",
    "graph_to_doc",
    "intent_tree_to_doc",
    "mapping_to_doc",
    "resolve_ownership",
    "triple_to_doc",
    "validate_triple",
]
