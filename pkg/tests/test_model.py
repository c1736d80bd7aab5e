"""Triple validation, canonical serialization, and graph diffs."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alignloop.errors import (
    CycleInIntentTree,
    DanglingReference,
    DuplicateId,
    MalformedDocument,
)
from alignloop.model import (
    EdgeKind,
    TaskEdge,
    TaskNode,
    apply_delta,
    diff_graphs,
    dumps_triple,
    triple_to_doc,
    validate_triple,
)
from generators import random_triple


class TestValidateTriple:
    def test_minimal_document(self, minimal_doc):
        triple = validate_triple(minimal_doc)
        assert triple.round == 0
        assert triple.intent_tree.root == "i0"
        assert set(triple.graph.nodes) == {"g0"}
        assert triple.mapping.owner["g0"] == "i0"

    def test_accepts_json_string(self, minimal_doc):
        triple = validate_triple(json.dumps(minimal_doc))
        assert triple.round == 0

    def test_dangling_mapping_reference(self, minimal_doc):
        minimal_doc["mapping"]["entries"][0]["task_node_ids"] = ["g9"]
        with pytest.raises(DanglingReference):
            validate_triple(minimal_doc)

    def test_child_with_two_parents(self, minimal_doc):
        minimal_doc["intent_tree"]["nodes"] = [
            {"id": "i0", "text": "goal", "state": "NOT_COMPLETED",
             "children": ["a", "b"]},
            {"id": "a", "text": "a", "state": "NOT_COMPLETED", "children": ["c"]},
            {"id": "b", "text": "b", "state": "NOT_COMPLETED", "children": ["c"]},
            {"id": "c", "text": "c", "state": "NOT_COMPLETED", "children": []},
        ]
        with pytest.raises(CycleInIntentTree):
            validate_triple(minimal_doc)

    def test_duplicate_task_id(self, minimal_doc):
        minimal_doc["graph"]["nodes"].append(
            {"id": "g0", "label": "again", "detail": None, "origin": "EXTRACTED"})
        with pytest.raises(DuplicateId):
            validate_triple(minimal_doc)

    def test_unreachable_intent_node(self, minimal_doc):
        minimal_doc["intent_tree"]["nodes"].append(
            {"id": "island", "text": "x", "state": "NOT_COMPLETED", "children": []})
        with pytest.raises(CycleInIntentTree):
            validate_triple(minimal_doc)

    def test_round_version_mismatch(self, minimal_doc):
        minimal_doc["round"] = 2
        with pytest.raises(MalformedDocument):
            validate_triple(minimal_doc)

    def test_missing_top_level_key(self):
        with pytest.raises(MalformedDocument):
            validate_triple({"graph": {}, "mapping": {}, "round": 0})

    def test_empty_intent_text(self, minimal_doc):
        minimal_doc["intent_tree"]["nodes"][0]["text"] = "   "
        with pytest.raises(MalformedDocument):
            validate_triple(minimal_doc)

    def test_self_loop_edge(self, minimal_doc):
        minimal_doc["graph"]["edges"] = [
            {"src": "g0", "dst": "g0", "kind": "DEPENDENCY"}]
        with pytest.raises(MalformedDocument):
            validate_triple(minimal_doc)

    def test_cycle_flag_exposed(self, minimal_doc):
        minimal_doc["graph"]["nodes"].append(
            {"id": "g1", "label": "b", "detail": None, "origin": "EXTRACTED"})
        minimal_doc["graph"]["edges"] = [
            {"src": "g0", "dst": "g1", "kind": "DEPENDENCY"},
            {"src": "g1", "dst": "g0", "kind": "DEPENDENCY"},
        ]
        triple = validate_triple(minimal_doc)   # cycles are legal
        assert triple.graph.has_cycle()

    def test_acyclic_flag(self, two_branch_triple):
        assert not two_branch_triple.graph.has_cycle()


class TestOwnership:
    def test_overlap_goes_to_preorder_first(self, minimal_doc):
        minimal_doc["intent_tree"]["nodes"] = [
            {"id": "i0", "text": "goal", "state": "NOT_COMPLETED",
             "children": ["i1", "i2"]},
            {"id": "i1", "text": "first", "state": "NOT_COMPLETED", "children": []},
            {"id": "i2", "text": "second", "state": "NOT_COMPLETED", "children": []},
        ]
        minimal_doc["mapping"]["entries"] = [
            {"intent_id": "i2", "task_node_ids": ["g0"]},
            {"intent_id": "i1", "task_node_ids": ["g0"]},
        ]
        triple = validate_triple(minimal_doc)
        assert triple.mapping.owner["g0"] == "i1"          # preorder beats entry order
        assert triple.mapping.referenced_by["g0"] == frozenset({"i2"})

    def test_unmapped_node_owned_by_root(self, minimal_doc):
        minimal_doc["graph"]["nodes"].append(
            {"id": "g1", "label": "stray", "detail": None, "origin": "EXTRACTED"})
        triple = validate_triple(minimal_doc)
        assert triple.mapping.owner["g1"] == "i0"

    def test_resolution_ignores_entry_order(self, minimal_doc):
        minimal_doc["intent_tree"]["nodes"] = [
            {"id": "i0", "text": "goal", "state": "NOT_COMPLETED",
             "children": ["i1", "i2"]},
            {"id": "i1", "text": "first", "state": "NOT_COMPLETED", "children": []},
            {"id": "i2", "text": "second", "state": "NOT_COMPLETED", "children": []},
        ]
        entries = [
            {"intent_id": "i1", "task_node_ids": ["g0"]},
            {"intent_id": "i2", "task_node_ids": ["g0"]},
        ]
        minimal_doc["mapping"]["entries"] = entries
        first = validate_triple(json.loads(json.dumps(minimal_doc)))
        minimal_doc["mapping"]["entries"] = list(reversed(entries))
        second = validate_triple(minimal_doc)
        assert first.mapping.owner == second.mapping.owner


class TestRoundTrip:
    def test_canonical_form_is_fixed_point(self, minimal_doc):
        triple = validate_triple(minimal_doc)
        text = dumps_triple(triple)
        again = validate_triple(text)
        assert again == triple
        assert dumps_triple(again) == text

    def test_random_triples_round_trip(self):
        rng = random.Random(20240811)
        for _ in range(50):
            triple = random_triple(rng, overlap_claims=True)
            again = validate_triple(dumps_triple(triple))
            assert again == triple
            assert dumps_triple(again) == dumps_triple(triple)

    def test_doc_matches_schema(self, minimal_doc):
        import jsonschema
        from importlib import resources

        schema = json.loads(resources.files("alignloop").joinpath(
            "schema/triple.schema.json").read_text("utf-8"))
        triple = validate_triple(minimal_doc)
        jsonschema.validate(triple_to_doc(triple), schema)

    def test_schema_rejects_malformed(self):
        import jsonschema
        from importlib import resources

        schema = json.loads(resources.files("alignloop").joinpath(
            "schema/triple.schema.json").read_text("utf-8"))
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({"intent_tree": {}, "graph": {}, "mapping": {},
                                 "round": -1}, schema)


def _graph_of(triple):
    return triple.graph


class TestDiffGraphs:
    def test_identity_diff_is_empty(self, two_branch_triple):
        delta = diff_graphs(two_branch_triple.graph, two_branch_triple.graph)
        assert delta.is_empty()

    def test_added_node_and_edge(self, minimal_doc):
        before = validate_triple(minimal_doc).graph
        after_nodes = dict(before.nodes)
        after_nodes["b"] = TaskNode(id="b", label="second")
        after = type(before)(nodes=after_nodes, edges=frozenset(
            {TaskEdge(src="g0", dst="b", kind=EdgeKind.DEPENDENCY)}))
        delta = diff_graphs(before, after)
        assert [n.id for n in delta.added_nodes] == ["b"]
        assert delta.added_edges == (TaskEdge("g0", "b", EdgeKind.DEPENDENCY),)
        assert not delta.removed_node_ids and not delta.relabelled_nodes

    def test_relabel_only(self, minimal_doc):
        before = validate_triple(minimal_doc).graph
        after_nodes = dict(before.nodes)
        after_nodes["g0"] = TaskNode(id="g0", label="renamed")
        after = type(before)(nodes=after_nodes, edges=before.edges)
        delta = diff_graphs(before, after)
        assert [n.id for n in delta.relabelled_nodes] == ["g0"]
        assert not delta.added_nodes and not delta.removed_node_ids
        assert not delta.added_edges and not delta.removed_edges

    def test_apply_inverts_diff_on_random_pairs(self):
        rng = random.Random(99)
        for _ in range(100):
            before = random_triple(rng, max_tasks=6).graph
            after = random_triple(rng, max_tasks=6).graph
            delta = diff_graphs(before, after)
            assert apply_delta(before, delta) == after


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_diff_apply_property(seed):
    rng = random.Random(seed)
    before = random_triple(rng, max_tasks=7).graph
    after = random_triple(rng, max_tasks=7).graph
    assert apply_delta(before, diff_graphs(before, after)) == after
