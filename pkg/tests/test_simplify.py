"""Collapse behavior, quotient soundness, and oracle agreement."""

from __future__ import annotations

import random

import pytest

from alignloop.errors import InvalidFocus, NotASupernode
from alignloop.model import (
    EdgeKind,
    MappingEntry,
    TaskEdge,
    Triple,
    UnderstandingGraph,
    resolve_ownership,
    validate_triple,
)
from alignloop.simplify import expand_supernode, simplify, view_to_doc
from generators import random_triple
from oracles import oracle_simplify_doc


class TestFixture:
    """The 5-task, 2-branch fixture traced by hand."""

    def test_focus_all_keeps_everything(self, two_branch_triple):
        view = simplify(two_branch_triple, {"R", "A", "B"})
        assert set(view.task_nodes) == {"g1", "g2", "g3", "g4", "g5"}
        assert not view.supernodes
        assert view.edges == two_branch_triple.graph.edges
        assert view.highlight == frozenset({"g1", "g2", "g3", "g4", "g5"})

    def test_focus_a_collapses_b(self, two_branch_triple):
        view = simplify(two_branch_triple, {"A"})
        assert set(view.task_nodes) == {"g1", "g2"}
        assert set(view.supernodes) == {"super:B"}
        super_b = view.supernodes["super:B"]
        assert super_b.member_ids == frozenset({"g3", "g4", "g5"})
        assert super_b.label == "second part"
        assert view.edges == frozenset({
            TaskEdge("g1", "g2", EdgeKind.DEPENDENCY),
            TaskEdge("g2", "super:B", EdgeKind.DEPENDENCY),
        })
        # g3->g4 and g3->g5 became self-loops on the supernode and vanished
        assert view.highlight == frozenset({"g1", "g2"})

    def test_focus_empty_collapses_both(self, two_branch_triple):
        view = simplify(two_branch_triple, frozenset())
        assert not view.task_nodes
        assert set(view.supernodes) == {"super:A", "super:B"}
        assert view.edges == frozenset({
            TaskEdge("super:A", "super:B", EdgeKind.DEPENDENCY)})
        assert view.highlight == frozenset()

    def test_focus_root_keeps_full_graph(self, two_branch_triple):
        view = simplify(two_branch_triple, {"R"})
        assert set(view.task_nodes) == {"g1", "g2", "g3", "g4", "g5"}
        assert not view.supernodes

    def test_invalid_focus(self, two_branch_triple):
        with pytest.raises(InvalidFocus):
            simplify(two_branch_triple, {"nope"})


class TestExpandSupernode:
    def test_members_of_collapsed_branch(self, two_branch_triple):
        view = simplify(two_branch_triple, {"A"})
        assert expand_supernode(view, "super:B") == frozenset({"g3", "g4", "g5"})

    def test_ordinary_node_rejected(self, two_branch_triple):
        view = simplify(two_branch_triple, {"A"})
        with pytest.raises(NotASupernode):
            expand_supernode(view, "g1")

    def test_singleton_collapse(self, minimal_doc):
        minimal_doc["intent_tree"]["nodes"] = [
            {"id": "i0", "text": "goal", "state": "NOT_COMPLETED",
             "children": ["i1"]},
            {"id": "i1", "text": "only child", "state": "NOT_COMPLETED",
             "children": []},
        ]
        minimal_doc["mapping"]["entries"] = [
            {"intent_id": "i1", "task_node_ids": ["g0"]}]
        triple = validate_triple(minimal_doc)
        view = simplify(triple, frozenset())
        assert expand_supernode(view, "super:i1") == frozenset({"g0"})


class TestRootOwnership:
    def test_root_owned_nodes_never_collapse(self, two_branch_triple):
        # move g5 out of B's claim: it becomes root-owned (unmapped)
        entries = tuple(
            MappingEntry(intent_id=e.intent_id,
                         task_node_ids=e.task_node_ids - {"g5"})
            for e in two_branch_triple.mapping.entries
        )
        entries = tuple(e for e in entries if e.task_node_ids)
        mapping = resolve_ownership(two_branch_triple.intent_tree,
                                    two_branch_triple.graph, entries)
        triple = Triple(intent_tree=two_branch_triple.intent_tree,
                        graph=two_branch_triple.graph, mapping=mapping, round=0)
        view = simplify(triple, frozenset())
        assert set(view.task_nodes) == {"g5"}
        assert view.supernodes["super:B"].member_ids == frozenset({"g3", "g4"})

    def test_empty_subtree_gets_no_supernode(self, two_branch_triple):
        # strip B's claims entirely: its would-be supernode has no members
        entries = tuple(e for e in two_branch_triple.mapping.entries
                        if e.intent_id != "B")
        mapping = resolve_ownership(two_branch_triple.intent_tree,
                                    two_branch_triple.graph, entries)
        triple = Triple(intent_tree=two_branch_triple.intent_tree,
                        graph=two_branch_triple.graph, mapping=mapping, round=0)
        view = simplify(triple, frozenset())
        assert "super:B" not in view.supernodes
        # g3,g4,g5 became root-owned, so they stay expanded
        assert set(view.task_nodes) == {"g3", "g4", "g5"}


class TestEdgeKinds:
    def test_mixed_parallel_edges_merge_to_dependency(self, two_branch_triple):
        edges = set(two_branch_triple.graph.edges)
        edges.add(TaskEdge("g1", "g3", EdgeKind.DATA_FLOW))
        edges.add(TaskEdge("g2", "g4", EdgeKind.DATA_FLOW))
        graph = UnderstandingGraph(nodes=two_branch_triple.graph.nodes,
                                   edges=frozenset(edges))
        mapping = resolve_ownership(two_branch_triple.intent_tree, graph,
                                    two_branch_triple.mapping.entries)
        triple = Triple(intent_tree=two_branch_triple.intent_tree, graph=graph,
                        mapping=mapping, round=0)
        view = simplify(triple, {"A"})
        # g2->g3 (DEPENDENCY), g1->g3 and g2->g4 (DATA_FLOW) all land on
        # different pairs; only g2->super:B merges kinds (g2->g3 dep, g2->g4 flow)
        kinds = {(e.src, e.dst): e.kind for e in view.edges}
        assert kinds[("g2", "super:B")] == EdgeKind.DEPENDENCY
        assert kinds[("g1", "super:B")] == EdgeKind.DATA_FLOW

    def test_retained_dual_kind_parallels_pass_through(self, two_branch_triple):
        # both-kind parallel edges between two retained nodes survive as-is;
        # merging applies only at supernode boundaries
        edges = set(two_branch_triple.graph.edges)
        edges.add(TaskEdge("g1", "g2", EdgeKind.DATA_FLOW))   # parallel to DEPENDENCY
        graph = UnderstandingGraph(nodes=two_branch_triple.graph.nodes,
                                   edges=frozenset(edges))
        mapping = resolve_ownership(two_branch_triple.intent_tree, graph,
                                    two_branch_triple.mapping.entries)
        triple = Triple(intent_tree=two_branch_triple.intent_tree, graph=graph,
                        mapping=mapping, round=0)
        view = simplify(triple, {"A"})
        kept = {e for e in view.edges if (e.src, e.dst) == ("g1", "g2")}
        assert kept == {TaskEdge("g1", "g2", EdgeKind.DEPENDENCY),
                        TaskEdge("g1", "g2", EdgeKind.DATA_FLOW)}

    def test_uniform_data_flow_kept(self, two_branch_triple):
        edges = frozenset({TaskEdge("g1", "g3", EdgeKind.DATA_FLOW)})
        graph = UnderstandingGraph(nodes=two_branch_triple.graph.nodes,
                                   edges=edges)
        mapping = resolve_ownership(two_branch_triple.intent_tree, graph,
                                    two_branch_triple.mapping.entries)
        triple = Triple(intent_tree=two_branch_triple.intent_tree, graph=graph,
                        mapping=mapping, round=0)
        view = simplify(triple, {"A"})
        assert view.edges == frozenset({
            TaskEdge("g1", "super:B", EdgeKind.DATA_FLOW)})


class TestAgainstOracle:
    def test_fixture_all_focus_subsets(self, two_branch_triple):
        from itertools import chain, combinations
        ids = ["R", "A", "B"]
        subsets = chain.from_iterable(combinations(ids, k)
                                      for k in range(len(ids) + 1))
        for subset in subsets:
            focus = frozenset(subset)
            assert view_to_doc(simplify(two_branch_triple, focus)) == \
                oracle_simplify_doc(two_branch_triple, focus)

    def test_random_triples_random_focus(self):
        rng = random.Random(31337)
        for _ in range(300):
            triple = random_triple(rng, overlap_claims=True)
            ids = list(triple.intent_tree.nodes)
            focus = frozenset(rng.sample(ids, rng.randint(0, len(ids))))
            assert view_to_doc(simplify(triple, focus)) == \
                oracle_simplify_doc(triple, focus)


class TestQuotientInvariants:
    def test_soundness_and_reachability(self):
        rng = random.Random(404)
        for _ in range(200):
            triple = random_triple(rng)
            ids = list(triple.intent_tree.nodes)
            focus = frozenset(rng.sample(ids, rng.randint(0, len(ids))))
            view = simplify(triple, focus)
            _assert_quotient_sound(triple, view)
            _assert_reachability_preserved(triple, view)

    def test_focus_preservation(self):
        # every task node owned by a focused intent stays expanded
        rng = random.Random(808)
        for _ in range(200):
            triple = random_triple(rng)
            ids = list(triple.intent_tree.nodes)
            focus = frozenset(rng.sample(ids, rng.randint(0, len(ids))))
            view = simplify(triple, focus)
            for task_id, owner in triple.mapping.owner.items():
                if owner in focus:
                    assert task_id in view.task_nodes
                    assert task_id in view.highlight

    def test_idempotence(self):
        # re-expressing a view as a triple (supernodes as ordinary nodes
        # owned by their pivot intent) and simplifying again with the same
        # focus changes neither the node/edge structure nor the highlight
        rng = random.Random(2718)
        for _ in range(100):
            triple = random_triple(rng, every_second_layer_owns=True)
            ids = list(triple.intent_tree.nodes)
            focus = frozenset(rng.sample(ids, rng.randint(0, len(ids))))
            view = simplify(triple, focus)
            reexpressed = _view_as_triple(view, triple)
            again = simplify(reexpressed, focus)
            assert again.node_ids() == view.node_ids()
            assert again.edges == view.edges
            assert again.highlight == view.highlight
            labels = {**{n.id: n.label for n in again.task_nodes.values()},
                      **{s.id: s.label for s in again.supernodes.values()}}
            expected = {**{n.id: n.label for n in view.task_nodes.values()},
                        **{s.id: s.label for s in view.supernodes.values()}}
            assert labels == expected


def _assert_quotient_sound(triple, view):
    phi = view.collapse.assignments
    view_pairs = {(e.src, e.dst) for e in view.edges}
    expected = {(phi[e.src], phi[e.dst]) for e in triple.graph.edges
                if phi[e.src] != phi[e.dst]}
    assert view_pairs == expected


def _assert_reachability_preserved(triple, view):
    def reach(edges, start):
        adjacency = {}
        for src, dst in edges:
            adjacency.setdefault(src, set()).add(dst)
        seen, stack = set(), [start]
        while stack:
            node = stack.pop()
            for nxt in adjacency.get(node, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    graph_edges = {(e.src, e.dst) for e in triple.graph.edges}
    view_edges = {(e.src, e.dst) for e in view.edges}
    phi = view.collapse.assignments
    for start in triple.graph.nodes:
        reachable = reach(graph_edges, start)
        view_reachable = reach(view_edges, phi[start])
        for target in reachable:
            if phi[target] != phi[start]:
                assert phi[target] in view_reachable


def _view_as_triple(view, original):
    """Rebuild a triple whose graph is the view, supernodes as plain nodes."""
    nodes = [{"id": n.id, "label": n.label, "detail": n.detail,
              "origin": n.origin.value} for n in view.task_nodes.values()]
    nodes += [{"id": s.id, "label": s.label, "detail": None,
               "origin": "EXTRACTED"} for s in view.supernodes.values()]
    owner_claims: dict[str, set[str]] = {}
    for task_id in view.task_nodes:
        owner_claims.setdefault(original.mapping.owner[task_id], set()).add(task_id)
    for super_id in view.supernodes:
        pivot = super_id.split(":", 1)[1]
        owner_claims.setdefault(pivot, set()).add(super_id)
    doc = {
        "intent_tree": {
            "root": original.intent_tree.root,
            "nodes": [
                {"id": n.id, "text": n.text, "state": n.state.value,
                 "children": list(n.children)}
                for n in original.intent_tree.nodes.values()
            ],
            "version": original.intent_tree.version,
        },
        "graph": {
            "nodes": nodes,
            "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind.value}
                      for e in view.edges],
        },
        "mapping": {"entries": [
            {"intent_id": iid, "task_node_ids": sorted(tids)}
            for iid, tids in sorted(owner_claims.items())
        ]},
        "round": original.round,
    }
    return validate_triple(doc)
