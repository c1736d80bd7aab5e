"""Text-similarity metrics and extraction-throughput accounting.

ROUGE-1/2/L and BLEU compare student-extracted triples against the
two-stage ground truth over their canonical serialized text. ROUGE is
reported as F1. BLEU uses n-grams up to min(4, candidate length), uniform
weights, a brevity penalty, and an epsilon floor (1e-9) for zero counts
at orders within that clip; a candidate with no matching n-grams at any
order scores exactly 0. Throughput is valid tokens per second: only
tokens belonging to the emitted triple count as valid.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyCorpus, EmptyText, ZeroRate

_EPSILON = 1e-9
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercase; words and individual punctuation marks are tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class SimilarityScores:
    rouge1: float
    rouge2: float
    rougeL: float
    bleu: float

    def __post_init__(self):
        for name in ("rouge1", "rouge2", "rougeL", "bleu"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of [0,1]: {value}")


@dataclass(frozen=True)
class EfficiencyRecord:
    valid_tokens: int
    elapsed: float            # seconds
    hardware_tag: str = ""

    def __post_init__(self):
        if self.elapsed <= 0:
            raise ValueError("elapsed must be > 0")
        if self.valid_tokens < 0:
            raise ValueError("valid_tokens must be >= 0")

    @property
    def rate(self) -> float:
        return self.valid_tokens / self.elapsed


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _clipped_matches(cand: Sequence[str], ref: Sequence[str], n: int) -> tuple[int, int]:
    """(matched n-grams after per-gram clipping, candidate n-gram count)."""
    cand_counts = _ngrams(cand, n)
    ref_counts = _ngrams(ref, n)
    matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    return matched, max(len(cand) - n + 1, 0)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge(candidate: str, reference: str, variant: str = "1") -> float:
    """ROUGE F1. variant is "1", "2" (n-gram overlap) or "L" (LCS)."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise EmptyText("both texts must tokenize to at least one token")
    if variant == "L":
        lcs = _lcs_length(cand, ref)
        return _f1(lcs / len(cand), lcs / len(ref))
    if variant not in ("1", "2"):
        raise ValueError(f"unknown ROUGE variant {variant!r}")
    n = int(variant)
    matched, cand_total = _clipped_matches(cand, ref, n)
    ref_total = max(len(ref) - n + 1, 0)
    if cand_total == 0 or ref_total == 0:
        return 0.0
    return _f1(matched / cand_total, matched / ref_total)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def bleu(candidate: str, reference: str) -> float:
    """BLEU with order clipped to the candidate length (max 4)."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand:
        raise EmptyText("candidate must tokenize to at least one token")
    if not ref:
        raise EmptyText("reference must tokenize to at least one token")

    max_order = min(4, len(cand))
    precisions: list[float] = []
    total_matched = 0
    for n in range(1, max_order + 1):
        matched, cand_total = _clipped_matches(cand, ref, n)
        total_matched += matched
        precisions.append(matched / cand_total if cand_total else 0.0)
    if total_matched == 0:
        return 0.0   # nothing overlaps at any order: a pure miss, not a smoothed one

    brevity = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    log_sum = sum(math.log(max(p, _EPSILON)) for p in precisions)
    return brevity * math.exp(log_sum / max_order)


def score_pair(candidate: str, reference: str) -> SimilarityScores:
    return SimilarityScores(
        rouge1=rouge(candidate, reference, "1"),
        rouge2=rouge(candidate, reference, "2"),
        rougeL=rouge(candidate, reference, "L"),
        bleu=bleu(candidate, reference),
    )


def score_corpus(pairs: Sequence[tuple[str, str]]) -> SimilarityScores:
    """Arithmetic mean of per-pair scores; pairs are (candidate, reference)."""
    if not pairs:
        raise EmptyCorpus("need at least one (candidate, reference) pair")
    scores = [score_pair(c, r) for c, r in pairs]
    count = len(scores)
    return SimilarityScores(
        rouge1=sum(s.rouge1 for s in scores) / count,
        rouge2=sum(s.rouge2 for s in scores) / count,
        rougeL=sum(s.rougeL for s in scores) / count,
        bleu=sum(s.bleu for s in scores) / count,
    )


def speedup(student: EfficiencyRecord, baseline: EfficiencyRecord) -> float:
    """Throughput ratio student/baseline in valid tokens per second."""
    if baseline.rate <= 0 or student.rate <= 0:
        raise ZeroRate("both rates must be > 0")
    return student.rate / baseline.rate


def format_report(columns: dict[str, SimilarityScores]) -> str:
    """Plain-text score table: one column per labeled run, one row per metric."""
    labels = list(columns)
    width = max([len("Metric")] + [len(label) for label in labels]) + 2
    rows = [("ROUGE-1", "rouge1"), ("ROUGE-2", "rouge2"),
            ("ROUGE-L", "rougeL"), ("BLEU", "bleu")]
    lines = ["".join(["Metric".ljust(width)] + [label.ljust(width) for label in labels])]
    lines.append("-" * (width * (len(labels) + 1)))
    for title, attr in rows:
        cells = [f"{getattr(columns[label], attr):.4f}".ljust(width) for label in labels]
        lines.append("".join([title.ljust(width)] + cells))
    return "\n".join(lines) + "\n"
