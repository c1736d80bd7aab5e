"""Id-matched diff between two understanding graphs.

The delta is what the UI highlights after each extraction or NL modify:
nodes added, removed, or relabelled, and edges added or removed. Ids are
stable across rounds, so matching by id gives the minimal delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .types import TaskEdge, TaskNode, UnderstandingGraph


@dataclass(frozen=True)
class GraphDelta:
    added_nodes: tuple[TaskNode, ...] = ()
    removed_node_ids: tuple[str, ...] = ()
    relabelled_nodes: tuple[TaskNode, ...] = ()   # post-change node values
    added_edges: tuple[TaskEdge, ...] = ()
    removed_edges: tuple[TaskEdge, ...] = ()

    def is_empty(self) -> bool:
        return not (self.added_nodes or self.removed_node_ids or self.relabelled_nodes
                    or self.added_edges or self.removed_edges)

    def changed_node_ids(self) -> frozenset[str]:
        """Ids of nodes that exist after the change and differ from before."""
        return frozenset(n.id for n in self.added_nodes + self.relabelled_nodes)


def diff_graphs(before: UnderstandingGraph, after: UnderstandingGraph) -> GraphDelta:
    """Minimal delta under id matching; apply_delta(before, delta) == after."""
    added_nodes = tuple(
        after.nodes[nid] for nid in sorted(set(after.nodes) - set(before.nodes))
    )
    removed_node_ids = tuple(sorted(set(before.nodes) - set(after.nodes)))
    relabelled = tuple(
        after.nodes[nid]
        for nid in sorted(set(before.nodes) & set(after.nodes))
        if after.nodes[nid] != before.nodes[nid]
    )
    edge_key = lambda e: (e.src, e.dst, e.kind.value)
    added_edges = tuple(sorted(after.edges - before.edges, key=edge_key))
    removed_edges = tuple(sorted(before.edges - after.edges, key=edge_key))
    return GraphDelta(
        added_nodes=added_nodes,
        removed_node_ids=removed_node_ids,
        relabelled_nodes=relabelled,
        added_edges=added_edges,
        removed_edges=removed_edges,
    )


def apply_delta(before: UnderstandingGraph, delta: GraphDelta) -> UnderstandingGraph:
    nodes = dict(before.nodes)
    for nid in delta.removed_node_ids:
        nodes.pop(nid, None)
    for node in delta.added_nodes:
        nodes[node.id] = node
    for node in delta.relabelled_nodes:
        nodes[node.id] = node
    edges = set(before.edges)
    edges.difference_update(delta.removed_edges)
    edges.update(delta.added_edges)
    # edges whose endpoint was removed cannot survive
    edges = {e for e in edges if e.src in nodes and e.dst in nodes}
    return UnderstandingGraph(nodes=nodes, edges=frozenset(edges))


def delta_to_doc(delta: GraphDelta) -> dict[str, Any]:
    node_doc = lambda n: {"id": n.id, "label": n.label, "detail": n.detail,
                          "origin": n.origin.value}
    edge_doc = lambda e: {"src": e.src, "dst": e.dst, "kind": e.kind.value}
    return {
        "added_nodes": [node_doc(n) for n in delta.added_nodes],
        "removed_node_ids": list(delta.removed_node_ids),
        "relabelled_nodes": [node_doc(n) for n in delta.relabelled_nodes],
        "added_edges": [edge_doc(e) for e in delta.added_edges],
        "removed_edges": [edge_doc(e) for e in delta.removed_edges],
    }
