"""Multi-agent simulation that synthesizes multi-round prompt histories.

Four scripted roles collaborate per session: a constructor decomposes a
seed task into a goal tree, a user simulator writes the next prompt for
the first unmet leaf, the conversational model generates code, and an
analyzer plays virtual execution environment, flipping subtask states it
judges completed. Each finished round also runs the two-stage teacher
extraction and emits one distillation line, so a batch of sessions yields
a training dataset without any human in the loop.

A session ends when every subtask is completed, when five consecutive
rounds make no progress, or at the round budget.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Optional

from .errors import AlignLoopError, DegenerateTree, GatewayError, InvalidVerdict, MalformedDocument
from .extractor import extract_teacher, emit_distillation_pair
from .gateway import Backends, Role, render_prompt, strip_fences
from .model import (
    IntentState,
    IntentTree,
    Triple,
    UnderstandingGraph,
    dumps_doc,
    intent_tree_to_doc,
    resolve_ownership,
)
from .model.validate import validate_intent_tree

logger = logging.getLogger(__name__)

STALL_LIMIT = 5   # consecutive no-progress rounds before giving up


class SessionStatus(str, Enum):
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    STALLED = "STALLED"


class SessionAborted(AlignLoopError):
    """A gateway failure cut a session short; partial output is attached."""

    def __init__(self, session: "PlaygroundSession", lines: list[str],
                 cause: Exception):
        super().__init__(f"session aborted in round "
                         f"{len(session.transcript) + 1}: {cause}")
        self.session = session
        self.lines = lines
        self.cause = cause


@dataclass(frozen=True)
class ExecutionReport:
    predicted_outcomes: str
    file_changes: tuple[str, ...]
    errors: tuple[str, ...]
    verdicts: dict[str, IntentState]    # intent id -> judged state


@dataclass(frozen=True)
class RoundEntry:
    prompt: str
    code: str
    report: ExecutionReport
    state_updates: dict[str, IntentState]   # leaves actually flipped


@dataclass
class PlaygroundSession:
    description: str
    tree: IntentTree
    transcript: list[RoundEntry] = field(default_factory=list)
    stagnation_counter: int = 0
    status: SessionStatus = SessionStatus.RUNNING

    def to_doc(self) -> dict[str, Any]:
        return {
            "description": self.description,
            "tree": intent_tree_to_doc(self.tree),
            "status": self.status.value,
            "stagnation_counter": self.stagnation_counter,
            "transcript": [
                {
                    "prompt": entry.prompt,
                    "code": entry.code,
                    "report": {
                        "predicted_outcomes": entry.report.predicted_outcomes,
                        "file_changes": list(entry.report.file_changes),
                        "errors": list(entry.report.errors),
                        "verdicts": {k: v.value for k, v in entry.report.verdicts.items()},
                    },
                    "state_updates": {k: v.value for k, v in entry.state_updates.items()},
                }
                for entry in self.transcript
            ],
        }


def construct_intent_tree(description: str, backends: Backends) -> IntentTree:
    """Decompose a seed description into a goal tree (>= 2 leaves)."""
    if not description or not description.strip():
        raise ValueError("description must be non-empty")
    request = render_prompt("construct_tree", description=description)
    messages = [{"role": "user", "content": request}]
    last_error: Exception | None = None
    for attempt in range(2):
        exchange = backends.chat(Role.EXTRACTOR, messages)
        try:
            tree = _parse_tree(exchange.response)
            return tree
        except (MalformedDocument, DegenerateTree) as exc:
            last_error = exc
            messages = messages + [
                {"role": "assistant", "content": exchange.response},
                {"role": "user", "content":
                    f"That tree was rejected: {exc}. Reply with a corrected "
                    "JSON tree only, with at least two leaf subtasks."},
            ]
    raise DegenerateTree(f"no usable tree after retry: {last_error}")


def construct_intent_tree_variants(description: str, backends: Backends,
                                   count: int) -> list[IntentTree]:
    """`count` trees with identical topology but differently worded texts.

    The first is the base decomposition; the rest are paraphrases of it,
    covering the different ways users phrase the same task.
    """
    if count < 1:
        raise ValueError("variant count must be >= 1")
    base = construct_intent_tree(description, backends)
    variants = [base]
    for index in range(2, count + 1):
        request = render_prompt("tree_variants",
                                tree=dumps_doc(intent_tree_to_doc(base)),
                                index=str(index))
        messages = [{"role": "user", "content": request}]
        last_error: Exception | None = None
        for attempt in range(2):
            exchange = backends.chat(Role.EXTRACTOR, messages)
            try:
                variant = _parse_tree(exchange.response)
                _require_same_topology(base, variant)
                variants.append(variant)
                break
            except (MalformedDocument, DegenerateTree) as exc:
                last_error = exc
                messages = messages + [
                    {"role": "assistant", "content": exchange.response},
                    {"role": "user", "content":
                        f"That variant was rejected: {exc}. Keep ids, children "
                        "and states identical; change only the texts."},
                ]
        else:
            raise DegenerateTree(f"variant {index} unusable after retry: {last_error}")
    return variants


def simulate_user_prompt(session: PlaygroundSession, backends: Backends) -> str:
    """Next user message, aimed at the first incomplete leaf in preorder."""
    if session.status != SessionStatus.RUNNING:
        raise ValueError(f"session is {session.status.value}, not RUNNING")
    target = _first_incomplete_leaf(session.tree)
    if target is None:
        raise ValueError("no NOT_COMPLETED leaf to prompt about")
    request = render_prompt(
        "simulate_prompt",
        target=session.tree.nodes[target].text,
        round=str(len(session.transcript) + 1),
        tree=dumps_doc(intent_tree_to_doc(session.tree)),
    )
    exchange = backends.chat(Role.CONVERSATIONAL, [{"role": "user", "content": request}])
    return exchange.response.strip()


def analyze_execution(code: str, tree: IntentTree, backends: Backends) -> ExecutionReport:
    """Virtual execution: predicted outcomes plus per-subtask verdicts.

    Verdicts never regress a completed subtask; a regressing verdict is
    kept at COMPLETED. Verdicts on unknown ids raise InvalidVerdict.
    """
    if not code or not code.strip():
        raise ValueError("code must be non-empty")
    request = render_prompt("analyze_execution", code=code,
                            tree=dumps_doc(intent_tree_to_doc(tree)))
    messages = [{"role": "user", "content": request}]
    last_error: Exception | None = None
    for attempt in range(2):
        exchange = backends.chat(Role.EXTRACTOR, messages)
        try:
            doc = json.loads(strip_fences(exchange.response))
            return _parse_report(doc, tree)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError,
                MalformedDocument) as exc:
            last_error = exc
            messages = messages + [
                {"role": "assistant", "content": exchange.response},
                {"role": "user", "content":
                    f"That report was rejected: {exc}. Reply with the JSON "
                    "report object only."},
            ]
    raise MalformedDocument(f"execution report unusable after retry: {last_error}")


def apply_report(tree: IntentTree, report: ExecutionReport) -> tuple[IntentTree, dict[str, IntentState]]:
    """Apply verdicts to the tree; returns (new tree, flips actually made).

    Only NOT_COMPLETED -> COMPLETED moves count. Parents complete
    automatically once all their children are complete.
    """
    nodes = dict(tree.nodes)
    flips: dict[str, IntentState] = {}
    for intent_id, verdict in sorted(report.verdicts.items()):
        node = nodes[intent_id]
        if verdict == IntentState.COMPLETED and node.state == IntentState.NOT_COMPLETED:
            nodes[intent_id] = replace(node, state=IntentState.COMPLETED)
            flips[intent_id] = IntentState.COMPLETED

    changed = True
    while changed:   # propagate completion upward
        changed = False
        for nid, node in nodes.items():
            if node.children and node.state == IntentState.NOT_COMPLETED:
                if all(nodes[c].state == IntentState.COMPLETED for c in node.children):
                    nodes[nid] = replace(node, state=IntentState.COMPLETED)
                    changed = True
    return IntentTree(root=tree.root, nodes=nodes, version=tree.version), flips


def seed_triple(tree: IntentTree) -> Triple:
    """Round-0 triple around a freshly constructed tree: empty graph."""
    graph = UnderstandingGraph(nodes={}, edges=frozenset())
    return Triple(intent_tree=tree, graph=graph,
                  mapping=resolve_ownership(tree, graph, ()), round=tree.version)


def run_session(description: str, backends: Backends, max_rounds: int,
                ) -> tuple[PlaygroundSession, list[str]]:
    """One full collaboration loop; returns the session and dataset lines.

    A gateway failure mid-loop raises SessionAborted carrying the rounds
    that did finish, so callers can persist the partial transcript.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    session = PlaygroundSession(description=description,
                                tree=construct_intent_tree(description, backends))
    prev = seed_triple(session.tree)
    lines: list[str] = []

    try:
        for _ in range(max_rounds):
            if session.status != SessionStatus.RUNNING:
                break
            prompt = simulate_user_prompt(session, backends)
            code_exchange = backends.chat(Role.CONVERSATIONAL, [
                {"role": "user", "content": render_prompt("generate_candidate_code",
                                                          prompt=prompt)},
            ])
            code = code_exchange.response
            report = analyze_execution(code, session.tree, backends)
            session.tree, flips = apply_report(session.tree, report)
            session.transcript.append(RoundEntry(
                prompt=prompt, code=code, report=report, state_updates=flips))

            if flips:
                session.stagnation_counter = 0
            else:
                session.stagnation_counter += 1

            record = extract_teacher(prompt, prev, backends,
                                     code_exchange=code_exchange)
            lines.append(emit_distillation_pair(record))
            prev = record.triple

            if _all_completed(session.tree):
                session.status = SessionStatus.COMPLETED
            elif session.stagnation_counter >= STALL_LIMIT:
                session.status = SessionStatus.STALLED
    except GatewayError as exc:
        raise SessionAborted(session, lines, exc) from exc
    return session, lines


@dataclass
class SessionOutcome:
    session: Optional[PlaygroundSession]
    lines: list[str]
    error: Optional[str] = None


def run_many(descriptions: list[str], backends_factory: Callable[[], Backends],
             max_rounds: int, workers: int = 4) -> list[SessionOutcome]:
    """Run independent sessions on a bounded worker pool.

    Failed sessions do not poison the batch: their partial transcripts and
    dataset lines come back in the outcome alongside the error.
    """
    def one(description: str) -> SessionOutcome:
        try:
            session, lines = run_session(description, backends_factory(), max_rounds)
            return SessionOutcome(session=session, lines=lines)
        except SessionAborted as exc:
            return SessionOutcome(session=exc.session, lines=exc.lines,
                                  error=str(exc))
        except (GatewayError, AlignLoopError) as exc:
            return SessionOutcome(session=None, lines=[], error=str(exc))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(one, descriptions))


def _parse_tree(response: str) -> IntentTree:
    try:
        doc = json.loads(strip_fences(response))
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"tree output is not valid JSON: {exc}") from exc
    tree = validate_intent_tree(doc, expected_version=0)
    if len(tree.leaves()) < 2:
        raise DegenerateTree("tree needs at least two leaf subtasks")
    bad_states = [nid for nid, n in tree.nodes.items()
                  if n.state != IntentState.NOT_COMPLETED]
    if bad_states:
        raise MalformedDocument(f"fresh tree nodes must start NOT_COMPLETED: {bad_states}")
    return tree


def _require_same_topology(base: IntentTree, variant: IntentTree) -> None:
    same = (base.root == variant.root
            and set(base.nodes) == set(variant.nodes)
            and all(base.nodes[nid].children == variant.nodes[nid].children
                    for nid in base.nodes))
    if not same:
        raise MalformedDocument("variant must keep the base tree's ids and topology")


def _parse_report(doc: Any, tree: IntentTree) -> ExecutionReport:
    if not isinstance(doc, dict):
        raise MalformedDocument("report must be a JSON object")
    verdicts: dict[str, IntentState] = {}
    for intent_id, value in doc.get("verdicts", {}).items():
        if intent_id not in tree.nodes:
            raise InvalidVerdict(f"verdict references unknown intent {intent_id!r}")
        verdicts[intent_id] = IntentState(value)
    return ExecutionReport(
        predicted_outcomes=str(doc.get("predicted_outcomes", "")),
        file_changes=tuple(doc.get("file_changes", [])),
        errors=tuple(doc.get("errors", [])),
        verdicts=verdicts,
    )


def _first_incomplete_leaf(tree: IntentTree) -> Optional[str]:
    for nid in tree.preorder():
        node = tree.nodes[nid]
        if not node.children and node.state == IntentState.NOT_COMPLETED:
            return nid
    return None


def _all_completed(tree: IntentTree) -> bool:
    return all(n.state == IntentState.COMPLETED for n in tree.nodes.values())
