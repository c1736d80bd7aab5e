"""Core value types: intent tree, task graph, mapping, and the triple.

All types are immutable after construction (frozen dataclasses over tuples
and frozensets), so validated values can be shared freely across threads.
Mutation always goes through functions that build a new value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional


class IntentState(str, Enum):
    COMPLETED = "COMPLETED"
    NOT_COMPLETED = "NOT_COMPLETED"


class TaskOrigin(str, Enum):
    EXTRACTED = "EXTRACTED"
    USER_ADDED = "USER_ADDED"
    NL_MODIFIED = "NL_MODIFIED"


class EdgeKind(str, Enum):
    DEPENDENCY = "DEPENDENCY"
    DATA_FLOW = "DATA_FLOW"


@dataclass(frozen=True)
class IntentNode:
    id: str
    text: str
    state: IntentState = IntentState.NOT_COMPLETED
    children: tuple[str, ...] = ()


@dataclass(frozen=True)
class IntentTree:
    root: str
    nodes: dict[str, IntentNode]
    version: int = 0

    def node(self, node_id: str) -> IntentNode:
        return self.nodes[node_id]

    def parent_of(self, node_id: str) -> Optional[str]:
        for candidate in self.nodes.values():
            if node_id in candidate.children:
                return candidate.id
        return None

    def preorder(self) -> Iterator[str]:
        """Root-first, child-order traversal of node ids."""
        stack = [self.root]
        while stack:
            nid = stack.pop()
            yield nid
            stack.extend(reversed(self.nodes[nid].children))

    def subtree_ids(self, node_id: str) -> frozenset[str]:
        out: set[str] = set()
        stack = [node_id]
        while stack:
            nid = stack.pop()
            out.add(nid)
            stack.extend(self.nodes[nid].children)
        return frozenset(out)

    def ancestors(self, node_id: str) -> tuple[str, ...]:
        """Proper ancestors, nearest first."""
        out: list[str] = []
        cur = self.parent_of(node_id)
        while cur is not None:
            out.append(cur)
            cur = self.parent_of(cur)
        return tuple(out)

    def leaves(self) -> tuple[str, ...]:
        return tuple(nid for nid in self.preorder() if not self.nodes[nid].children)

    def depth_of(self, node_id: str) -> int:
        """Root has depth 1; its children (the second layer) depth 2."""
        return 1 + len(self.ancestors(node_id))


@dataclass(frozen=True)
class TaskNode:
    id: str
    label: str
    detail: Optional[str] = None
    origin: TaskOrigin = TaskOrigin.EXTRACTED


@dataclass(frozen=True)
class TaskEdge:
    src: str
    dst: str
    kind: EdgeKind = EdgeKind.DEPENDENCY


@dataclass(frozen=True)
class UnderstandingGraph:
    nodes: dict[str, TaskNode]
    edges: frozenset[TaskEdge]

    def has_cycle(self) -> bool:
        """Cycles are legal in a task graph; this flag is informational."""
        adjacency: dict[str, list[str]] = {nid: [] for nid in self.nodes}
        for edge in self.edges:
            adjacency[edge.src].append(edge.dst)
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {nid: WHITE for nid in self.nodes}

        def visit(start: str) -> bool:
            stack: list[tuple[str, int]] = [(start, 0)]
            color[start] = GRAY
            while stack:
                nid, idx = stack[-1]
                if idx < len(adjacency[nid]):
                    stack[-1] = (nid, idx + 1)
                    nxt = adjacency[nid][idx]
                    if color[nxt] == GRAY:
                        return True
                    if color[nxt] == WHITE:
                        color[nxt] = GRAY
                        stack.append((nxt, 0))
                else:
                    color[nid] = BLACK
                    stack.pop()
            return False

        return any(visit(nid) for nid in self.nodes if color[nid] == WHITE)


@dataclass(frozen=True)
class MappingEntry:
    intent_id: str
    task_node_ids: frozenset[str]


@dataclass(frozen=True)
class Mapping:
    """Intent -> task-node claims, plus the resolved ownership view.

    `entries` holds the claims as given (one entry per claiming intent).
    `owner` is total over all task nodes after resolution: overlapping
    claims go to the first claimant in preorder, unclaimed nodes to the
    tree root. Losing claims survive as read-only referenced_by links.
    """

    entries: tuple[MappingEntry, ...]
    owner: dict[str, str] = field(default_factory=dict, compare=False)
    referenced_by: dict[str, frozenset[str]] = field(default_factory=dict, compare=False)

    def owned_by(self, intent_id: str) -> frozenset[str]:
        return frozenset(t for t, i in self.owner.items() if i == intent_id)


@dataclass(frozen=True)
class Triple:
    intent_tree: IntentTree
    graph: UnderstandingGraph
    mapping: Mapping
    round: int = 0

