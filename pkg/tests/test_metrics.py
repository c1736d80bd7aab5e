"""ROUGE/BLEU hand examples, bounds, and brute-force agreement."""

from __future__ import annotations

import random
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alignloop.errors import EmptyCorpus, EmptyText, ZeroRate
from alignloop.metrics import (
    EfficiencyRecord,
    bleu,
    rouge,
    score_corpus,
    score_pair,
    speedup,
    tokenize,
    format_report,
)
from oracles import oracle_bleu, oracle_rouge

ALPHABET = ["a", "b", "c"]


class TestRouge:
    def test_identical_texts_score_one(self):
        for variant in ("1", "2", "L"):
            assert rouge("the cat sat on the mat", "the cat sat on the mat",
                         variant) == pytest.approx(1.0)

    def test_unigram_hand_example(self):
        # "the cat sat" vs "the cat ran": 2 of 3 unigrams overlap
        assert rouge("the cat sat", "the cat ran", "1") == pytest.approx(
            0.6667, abs=1e-4)

    def test_lcs_hand_example(self):
        # LCS("a b c d", "a c b d") = 3 -> P = R = 3/4 -> F1 = 0.75
        assert rouge("a b c d", "a c b d", "L") == pytest.approx(0.75, abs=1e-9)

    def test_empty_text_rejected(self):
        with pytest.raises(EmptyText):
            rouge("", "something", "1")
        with pytest.raises(EmptyText):
            rouge("something", "   ", "1")

    def test_bigrams_on_single_token_texts(self):
        assert rouge("cat", "cat", "2") == 0.0   # no bigrams exist

    def test_tokenizer_lowercases_and_splits_punctuation(self):
        assert tokenize("Download, then Save!") == \
            ["download", ",", "then", "save", "!"]


class TestBleu:
    def test_identical_five_token_texts(self):
        assert bleu("a b c d e", "a b c d e") == pytest.approx(1.0)

    def test_fully_disjoint_texts(self):
        assert bleu("a b c", "x y z") == 0.0

    def test_brevity_penalty_hand_example(self):
        # candidate "the cat" vs reference "the cat sat": orders clip to 2,
        # both precisions are 1, so the score is the brevity penalty alone
        assert bleu("the cat", "the cat sat") == pytest.approx(0.6065, abs=1e-3)

    def test_empty_candidate_rejected(self):
        with pytest.raises(EmptyText):
            bleu("", "reference")


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=8),
           st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=8))
    def test_scores_within_bounds(self, cand, ref):
        scores = score_pair(" ".join(cand), " ".join(ref))
        for value in (scores.rouge1, scores.rouge2, scores.rougeL, scores.bleu):
            assert 0.0 <= value <= 1.0

    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=6))
    def test_self_similarity_is_one(self, tokens):
        text = " ".join(tokens)
        assert rouge(text, text, "1") == pytest.approx(1.0)
        assert rouge(text, text, "L") == pytest.approx(1.0)
        assert bleu(text, text) == pytest.approx(1.0)

    def test_appending_junk_never_raises_scores(self):
        # junk tokens are absent from the reference; with the candidate at
        # least as long as the reference the brevity penalty is already 1,
        # so both ROUGE precision and BLEU can only fall
        rng = random.Random(5150)
        for _ in range(200):
            ref = [rng.choice(ALPHABET) for _ in range(rng.randint(1, 5))]
            cand = [rng.choice(ALPHABET) for _ in range(rng.randint(len(ref), 8))]
            junk = ["zz"] * rng.randint(1, 3)
            base_bleu = bleu(" ".join(cand), " ".join(ref))
            junk_bleu = bleu(" ".join(cand + junk), " ".join(ref))
            assert junk_bleu <= base_bleu + 1e-12
            for variant in ("1", "2", "L"):
                base = _precision(cand, ref, variant)
                degraded = _precision(cand + junk, ref, variant)
                assert degraded <= base + 1e-12


class TestOracleAgreement:
    def test_exhaustive_short_pairs_sample(self):
        # the full <=6 x <=6 sweep lives in the acceptance suite; keep a
        # fast deterministic slice here
        seqs = [list(p) for n in (1, 2, 3) for p in product(ALPHABET, repeat=n)]
        for cand in seqs:
            for ref in seqs:
                _assert_matches_oracle(cand, ref)

    def test_random_longer_pairs(self):
        rng = random.Random(61)
        for _ in range(300):
            cand = [rng.choice(ALPHABET) for _ in range(rng.randint(1, 6))]
            ref = [rng.choice(ALPHABET) for _ in range(rng.randint(1, 6))]
            _assert_matches_oracle(cand, ref)


class TestCorpusAndSpeedup:
    def test_identical_pairs_mean_one(self):
        scores = score_corpus([("a b c", "a b c"), ("x y", "x y")])
        assert scores.rouge1 == scores.bleu == pytest.approx(1.0)

    def test_mixed_mean(self):
        scores = score_corpus([("a b c d", "a b c d"), ("a b c", "x y z")])
        assert scores.bleu == pytest.approx(0.5)

    def test_forty_pair_corpus_matches_per_pair_average(self):
        rng = random.Random(40)
        pairs = []
        for _ in range(40):
            cand = " ".join(rng.choice(ALPHABET) for _ in range(rng.randint(1, 6)))
            ref = " ".join(rng.choice(ALPHABET) for _ in range(rng.randint(1, 6)))
            pairs.append((cand, ref))
        mean = score_corpus(pairs)
        per_pair = [score_pair(c, r) for c, r in pairs]
        assert mean.rouge2 == pytest.approx(
            sum(s.rouge2 for s in per_pair) / 40, abs=1e-12)
        assert mean.bleu == pytest.approx(
            sum(s.bleu for s in per_pair) / 40, abs=1e-12)

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            score_corpus([])

    def test_speedup_equal_rates(self):
        record = EfficiencyRecord(valid_tokens=100, elapsed=10.0)
        assert speedup(record, record) == pytest.approx(1.0)

    def test_speedup_ratio(self):
        student = EfficiencyRecord(valid_tokens=916, elapsed=10.0,
                                   hardware_tag="server A")
        baseline = EfficiencyRecord(valid_tokens=40, elapsed=10.0,
                                    hardware_tag="server A")
        assert speedup(student, baseline) == pytest.approx(22.9, abs=1e-9)

    def test_zero_rate_rejected(self):
        student = EfficiencyRecord(valid_tokens=10, elapsed=1.0)
        baseline = EfficiencyRecord(valid_tokens=0, elapsed=1.0)
        with pytest.raises(ZeroRate):
            speedup(student, baseline)

    def test_elapsed_must_be_positive(self):
        with pytest.raises(ValueError):
            EfficiencyRecord(valid_tokens=1, elapsed=0.0)

    def test_report_layout(self):
        scores = score_corpus([("a b", "a b")])
        report = format_report({"zero-shot": scores, "fine-tuned": scores})
        lines = report.splitlines()
        assert "zero-shot" in lines[0] and "fine-tuned" in lines[0]
        assert lines[2].startswith("ROUGE-1")
        assert "1.0000" in lines[2]
        assert lines[5].startswith("BLEU")


def _assert_matches_oracle(cand: list[str], ref: list[str]) -> None:
    cand_text, ref_text = " ".join(cand), " ".join(ref)
    for variant in ("1", "2", "L"):
        assert rouge(cand_text, ref_text, variant) == pytest.approx(
            oracle_rouge(cand, ref, variant), abs=1e-9)
    assert bleu(cand_text, ref_text) == pytest.approx(
        oracle_bleu(cand, ref), abs=1e-9)


def _precision(cand: list[str], ref: list[str], variant: str) -> float:
    """ROUGE precision component, isolated for the monotonicity check."""
    from alignloop.metrics import _clipped_matches, _lcs_length

    if variant == "L":
        return _lcs_length(cand, ref) / len(cand)
    n = int(variant)
    matched, total = _clipped_matches(cand, ref, n)
    return matched / total if total else 0.0
