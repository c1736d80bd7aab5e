from __future__ import annotations

import json
from importlib import resources

import pytest

from alignloop.model import validate_triple

# one line per acceptance criterion, printed in the terminal summary where
# pytest's output capture cannot swallow it
_criterion_lines: list[str] = []


def record_criterion(line: str) -> None:
    _criterion_lines.append(f"[PASS] {line}")


def pytest_runtest_logreport(report):
    if (report.when == "call" and report.failed
            and "test_acceptance.py" in report.nodeid):
        _criterion_lines.append(f"[FAIL] {report.nodeid.split('::')[-1]}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def minimal_doc():
    """Smallest legal triple: one intent, one task, one mapping entry."""
    return {
        "intent_tree": {
            "root": "i0",
            "nodes": [{"id": "i0", "text": "goal", "state": "NOT_COMPLETED",
                       "children": []}],
            "version": 0,
        },
        "graph": {
            "nodes": [{"id": "g0", "label": "do the thing", "detail": None,
                       "origin": "EXTRACTED"}],
            "edges": [],
        },
        "mapping": {"entries": [{"intent_id": "i0", "task_node_ids": ["g0"]}]},
        "round": 0,
    }


@pytest.fixture
def two_branch_triple():
    """Root R with children A -> {g1,g2} and B -> {g3,g4,g5}.

    Edges g1->g2, g2->g3, g3->g4, g3->g5. The standard 5-node collapse
    fixture: focus={A} keeps g1,g2 and folds B's subgraph into one
    supernode reached by g2.
    """
    doc = {
        "intent_tree": {
            "root": "R",
            "nodes": [
                {"id": "R", "text": "root goal", "state": "NOT_COMPLETED",
                 "children": ["A", "B"]},
                {"id": "A", "text": "first part", "state": "NOT_COMPLETED",
                 "children": []},
                {"id": "B", "text": "second part", "state": "NOT_COMPLETED",
                 "children": []},
            ],
            "version": 0,
        },
        "graph": {
            "nodes": [
                {"id": f"g{k}", "label": f"task {k}", "detail": None,
                 "origin": "EXTRACTED"} for k in range(1, 6)
            ],
            "edges": [
                {"src": "g1", "dst": "g2", "kind": "DEPENDENCY"},
                {"src": "g2", "dst": "g3", "kind": "DEPENDENCY"},
                {"src": "g3", "dst": "g4", "kind": "DEPENDENCY"},
                {"src": "g3", "dst": "g5", "kind": "DEPENDENCY"},
            ],
        },
        "mapping": {"entries": [
            {"intent_id": "A", "task_node_ids": ["g1", "g2"]},
            {"intent_id": "B", "task_node_ids": ["g3", "g4", "g5"]},
        ]},
        "round": 0,
    }
    return validate_triple(doc)


@pytest.fixture(scope="session")
def walkthrough_scripts():
    text = resources.files("alignloop").joinpath(
        "mockdata/walkthrough.json").read_text("utf-8")
    return json.loads(text)


def load_walkthrough_scripts():
    text = resources.files("alignloop").joinpath(
        "mockdata/walkthrough.json").read_text("utf-8")
    return json.loads(text)
