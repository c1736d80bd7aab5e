"""Round-t triple extraction.

Two paths produce the next triple from (prompt, previous triple): the
teacher path first asks the conversational model for candidate code, then
has the extraction model derive the triple from prompt + code + previous
triple; the student path asks a fine-tuned small model for the triple in
a single step. Both validate the output against the canonical document
form, give the model one repair retry carrying the validation error, and
re-key nodes whose labels survived from the previous round so ids stay
stable across rounds.

Teacher records are also the distillation source: emit_distillation_pair
writes the (prompt + previous triple) -> triple training pair an external
trainer consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import InvalidTripleOutput, MalformedDocument
from .gateway import (Backends, ChatExchange, Role, approx_token_count,
                      render_prompt, strip_fences)
from .model import Triple, dumps_triple, triple_to_doc, validate_triple

LABEL_SIMILARITY_THRESHOLD = 0.9


class ExtractionPath(str, Enum):
    TEACHER = "TEACHER"
    STUDENT = "STUDENT"


@dataclass(frozen=True)
class StageTiming:
    latency_ms: float
    tokens: int          # completion tokens for the stage


@dataclass(frozen=True)
class ExtractionRecord:
    prompt: str
    prev_triple: Triple
    triple: Triple
    path: ExtractionPath
    intermediate_code: Optional[str] = None    # teacher path only
    timings: dict[str, StageTiming] = field(default_factory=dict)
    valid_tokens: int = 0       # tokens of the serialized triple
    overhead_tokens: int = 0    # teacher: tokens of the intermediate code
    repair_retries: int = 0

    def __post_init__(self):
        if self.path == ExtractionPath.TEACHER and self.intermediate_code is None:
            raise ValueError("teacher records carry intermediate code")
        if self.path == ExtractionPath.STUDENT and self.intermediate_code is not None:
            raise ValueError("student records have no intermediate code")
        if self.triple.round != self.prev_triple.round + 1:
            raise ValueError("extraction must advance the round by exactly 1")


def extract_teacher(prompt: str, prev: Triple, backends: Backends,
                    code_exchange: Optional[ChatExchange] = None) -> ExtractionRecord:
    """Two-stage extraction: candidate code first, then the triple.

    Callers that already hold this round's generated code (the playground
    loop does) pass its exchange to skip the first stage.
    """
    if code_exchange is None:
        code_exchange = backends.chat(Role.CONVERSATIONAL, [
            {"role": "user", "content": render_prompt("generate_candidate_code",
                                                      prompt=prompt)},
        ])
    code = code_exchange.response

    request = render_prompt(
        "extract_triple",
        prompt=prompt,
        code=code,
        prev_triple=dumps_triple(prev),
        next_round=str(prev.round + 1),
    )
    triple, exchange, retries = _request_valid_triple(
        backends, Role.EXTRACTOR, request, prev)

    serialized_tokens = approx_token_count(dumps_triple(triple))
    return ExtractionRecord(
        prompt=prompt,
        prev_triple=prev,
        triple=triple,
        path=ExtractionPath.TEACHER,
        intermediate_code=code,
        timings={
            "code": StageTiming(latency_ms=code_exchange.latency_ms,
                                tokens=code_exchange.usage.completion_tokens),
            "triple": StageTiming(latency_ms=exchange.latency_ms,
                                  tokens=exchange.usage.completion_tokens),
        },
        valid_tokens=serialized_tokens,
        overhead_tokens=approx_token_count(code),
        repair_retries=retries,
    )


def extract_student(prompt: str, prev: Triple, backends: Backends) -> ExtractionRecord:
    """Single-step extraction by the fine-tuned student model."""
    request = render_prompt(
        "student_extract",
        prompt=prompt,
        prev_triple=dumps_triple(prev),
        next_round=str(prev.round + 1),
    )
    triple, exchange, retries = _request_valid_triple(
        backends, Role.STUDENT, request, prev)
    return ExtractionRecord(
        prompt=prompt,
        prev_triple=prev,
        triple=triple,
        path=ExtractionPath.STUDENT,
        timings={
            "triple": StageTiming(latency_ms=exchange.latency_ms,
                                  tokens=exchange.usage.completion_tokens),
        },
        valid_tokens=approx_token_count(dumps_triple(triple)),
        repair_retries=retries,
    )


def emit_distillation_pair(record: ExtractionRecord) -> str:
    """One dataset line: model input (prompt + previous triple) and target."""
    if record.path != ExtractionPath.TEACHER:
        raise ValueError("distillation pairs come from teacher records only")
    return json.dumps({
        "prompt": record.prompt,
        "input_triple": dumps_triple(record.prev_triple),
        "target_triple": dumps_triple(record.triple),
        "round": record.triple.round,
    }, sort_keys=True)


def _request_valid_triple(backends: Backends, role: Role, request: str,
                          prev: Triple) -> tuple[Triple, ChatExchange, int]:
    """Completion -> validated triple, with one repair retry."""
    messages = [{"role": "user", "content": request}]
    expected_round = prev.round + 1
    last_error: Exception | None = None
    for attempt in range(2):
        exchange = backends.chat(role, messages)
        try:
            triple = validate_triple(strip_fences(exchange.response))
            if triple.round != expected_round:
                raise MalformedDocument(
                    f"round must be {expected_round}, got {triple.round}")
            return reconcile_ids(triple, prev), exchange, attempt
        except MalformedDocument as exc:
            last_error = exc
            messages = messages + [
                {"role": "assistant", "content": exchange.response},
                {"role": "user", "content":
                    f"That document was rejected: {exc}. "
                    "Reply with a corrected triple document only."},
            ]
    raise InvalidTripleOutput(f"triple invalid after repair retry: {last_error}")


def reconcile_ids(current: Triple, prev: Triple) -> Triple:
    """Re-key nodes that clearly survived from the previous round.

    The templates ask the model to copy ids from the previous triple, but
    models sometimes mint fresh ids for unchanged nodes. Any node whose id
    is new but whose label matches a previous node at >= 0.9 normalized
    edit similarity is renamed back to the old id (when that id is free),
    so diffs and highlights keep their identity across rounds.
    """
    task_renames = _survivor_renames(
        {nid: n.label for nid, n in current.graph.nodes.items()},
        {nid: n.label for nid, n in prev.graph.nodes.items()},
    )
    intent_renames = _survivor_renames(
        {nid: n.text for nid, n in current.intent_tree.nodes.items()},
        {nid: n.text for nid, n in prev.intent_tree.nodes.items()},
    )
    if not task_renames and not intent_renames:
        return current

    doc = triple_to_doc(current)
    task_map = lambda i: task_renames.get(i, i)
    intent_map = lambda i: intent_renames.get(i, i)
    doc["graph"]["nodes"] = [
        {**n, "id": task_map(n["id"])} for n in doc["graph"]["nodes"]]
    doc["graph"]["edges"] = [
        {**e, "src": task_map(e["src"]), "dst": task_map(e["dst"])}
        for e in doc["graph"]["edges"]]
    doc["intent_tree"]["root"] = intent_map(doc["intent_tree"]["root"])
    doc["intent_tree"]["nodes"] = [
        {**n, "id": intent_map(n["id"]),
         "children": [intent_map(c) for c in n["children"]]}
        for n in doc["intent_tree"]["nodes"]]
    doc["mapping"]["entries"] = [
        {"intent_id": intent_map(e["intent_id"]),
         "task_node_ids": [task_map(t) for t in e["task_node_ids"]]}
        for e in doc["mapping"]["entries"]]
    return validate_triple(doc)


def _survivor_renames(current_labels: dict[str, str],
                      prev_labels: dict[str, str]) -> dict[str, str]:
    """new-id -> previous-id map for label matches at >= 0.9 similarity."""
    renames: dict[str, str] = {}
    taken = set(current_labels)   # prev ids already present stay untouched
    for new_id in sorted(set(current_labels) - set(prev_labels)):
        candidates = sorted(
            ((prev_id, _edit_similarity(current_labels[new_id], prev_labels[prev_id]))
             for prev_id in prev_labels if prev_id not in taken),
            key=lambda pair: (-pair[1], pair[0]),
        )
        if candidates and candidates[0][1] >= LABEL_SIMILARITY_THRESHOLD:
            prev_id = candidates[0][0]
            renames[new_id] = prev_id
            taken.add(prev_id)
    return renames


def _edit_similarity(a: str, b: str) -> float:
    """1 - levenshtein/max_len on lowercased, stripped strings."""
    a, b = a.strip().lower(), b.strip().lower()
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    previous = list(range(len(b) + 1))
    for i, char_a in enumerate(a, start=1):
        current = [i]
        for j, char_b in enumerate(b, start=1):
            cost = 0 if char_a == char_b else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1,
                               previous[j - 1] + cost))
        previous = current
    return 1.0 - previous[-1] / max(len(a), len(b))

