"""Intent-aware graph simplification.

Collapses the task subgraphs of intent subtrees that are untouched by the
current focus set into single supernodes, and rebuilds the surviving edge
set through the collapse map. The traversal starts at the second layer of
the intent tree (the root's children): a subtree collapses only when it
contains no focus member and none of its ancestors is focused; otherwise
the procedure recurses into its children and re-applies the same test.
Task nodes owned by the root itself (including unmapped ones) are never
collapsed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from .errors import InvalidFocus, NotASupernode
from .model import EdgeKind, TaskEdge, TaskNode, Triple

SUPERNODE_PREFIX = "super:"


@dataclass(frozen=True)
class Supernode:
    id: str
    label: str                    # owning intent's text, verbatim
    member_ids: frozenset[str]

    @property
    def member_count(self) -> int:
        return len(self.member_ids)


@dataclass(frozen=True)
class CollapseMap:
    """Total function over task-node ids: member -> supernode, else identity."""

    assignments: dict[str, str]

    def apply(self, task_id: str) -> str:
        return self.assignments[task_id]


@dataclass(frozen=True)
class SimplifiedView:
    task_nodes: dict[str, TaskNode]        # retained, uncollapsed
    supernodes: dict[str, Supernode]
    edges: frozenset[TaskEdge]             # endpoints are view node ids
    highlight: frozenset[str]
    collapse: CollapseMap

    def node_ids(self) -> frozenset[str]:
        return frozenset(self.task_nodes) | frozenset(self.supernodes)


def simplify(triple: Triple, focus: Iterable[str]) -> SimplifiedView:
    """Build the simplified view of a triple for the given focus set."""
    tree = triple.intent_tree
    focus_set = frozenset(focus)
    unknown = focus_set - set(tree.nodes)
    if unknown:
        raise InvalidFocus(f"focus ids not in the intent tree: {sorted(unknown)}")

    owned: dict[str, set[str]] = {iid: set() for iid in tree.nodes}
    for task_id, intent_id in triple.mapping.owner.items():
        owned[intent_id].add(task_id)

    subtree_cache: dict[str, frozenset[str]] = {}

    def subtree(v: str) -> frozenset[str]:
        if v not in subtree_cache:
            subtree_cache[v] = tree.subtree_ids(v)
        return subtree_cache[v]

    pivots: list[str] = []

    def visit(v: str, blocked: bool) -> None:
        if not blocked and not (subtree(v) & focus_set):
            pivots.append(v)
            return
        for child in tree.nodes[v].children:
            visit(child, blocked or v in focus_set)

    for second_layer in tree.nodes[tree.root].children:
        visit(second_layer, tree.root in focus_set)

    assignments = {task_id: task_id for task_id in triple.graph.nodes}
    supernodes: dict[str, Supernode] = {}
    for pivot in pivots:
        members = frozenset().union(*(owned[w] for w in subtree(pivot)))
        if not members:
            continue   # nothing mapped below this intent; no supernode
        super_id = SUPERNODE_PREFIX + pivot
        supernodes[super_id] = Supernode(
            id=super_id, label=tree.nodes[pivot].text, member_ids=members)
        for member in members:
            assignments[member] = super_id

    collapse = CollapseMap(assignments=assignments)
    retained = {tid: node for tid, node in triple.graph.nodes.items()
                if assignments[tid] == tid}

    kinds_by_pair: dict[tuple[str, str], set[EdgeKind]] = {}
    for edge in triple.graph.edges:
        src, dst = assignments[edge.src], assignments[edge.dst]
        if src == dst:
            continue   # edge internal to one collapsed subgraph
        kinds_by_pair.setdefault((src, dst), set()).add(edge.kind)
    # merging happens only at supernode boundaries; between two retained
    # nodes the original edges (including dual-kind parallels) pass through
    # untouched, so a no-collapse view reproduces the graph verbatim
    edges: set[TaskEdge] = set()
    for (src, dst), kinds in kinds_by_pair.items():
        if src in supernodes or dst in supernodes:
            merged = kinds.pop() if len(kinds) == 1 else EdgeKind.DEPENDENCY
            edges.add(TaskEdge(src=src, dst=dst, kind=merged))
        else:
            edges.update(TaskEdge(src=src, dst=dst, kind=k) for k in kinds)

    highlight = frozenset(
        task_id for intent_id in focus_set for task_id in owned.get(intent_id, ()))

    return SimplifiedView(task_nodes=retained, supernodes=supernodes,
                          edges=frozenset(edges), highlight=highlight,
                          collapse=collapse)


def expand_supernode(view: SimplifiedView, supernode_id: str) -> frozenset[str]:
    """Member ids of a supernode, for highlighting its region in the full graph."""
    node = view.supernodes.get(supernode_id)
    if node is None:
        raise NotASupernode(f"{supernode_id!r} is not a supernode in this view")
    return node.member_ids


def view_to_doc(view: SimplifiedView) -> dict[str, Any]:
    """Serialize in the shared document family.

    Supernodes are distinguishable by their member_ids field.
    """
    nodes: list[dict[str, Any]] = [
        {"id": n.id, "label": n.label, "detail": n.detail, "origin": n.origin.value}
        for n in view.task_nodes.values()
    ]
    nodes.extend(
        {"id": s.id, "label": s.label, "member_count": s.member_count,
         "member_ids": sorted(s.member_ids)}
        for s in view.supernodes.values()
    )
    nodes.sort(key=lambda n: n["id"])
    return {
        "nodes": nodes,
        "edges": [
            {"src": e.src, "dst": e.dst, "kind": e.kind.value}
            for e in sorted(view.edges, key=lambda e: (e.src, e.dst, e.kind.value))
        ],
        "highlight": sorted(view.highlight),
        "collapse": dict(sorted(view.collapse.assignments.items())),
    }
