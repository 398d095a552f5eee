import math
import random

import pytest

from uqgen.core import Generation, TokenStep, make_step
from uqgen.token_scores import (
    SentenceSpan,
    SpanScores,
    passage_score,
    sentence_scores,
    single_inference_score,
    split_sentences,
    token_entropy,
    token_nll,
    zero_mass_entries,
)

from .conftest import gen_from_probs

LN5 = 1.6094379124341003


def step_with(probs, token=None, pos=0):
    token = token or next(iter(probs))
    return make_step(token, math.log(probs[token]), [(t, math.log(p)) for t, p in probs.items()], pos)[0]


@pytest.mark.parametrize("p,expected", [(0.1, 2.302585092994046), (1.0, 0.0), (0.5, 0.6931471805599453)])
def test_token_nll(p, expected):
    assert token_nll(step_with({"a": p})) == pytest.approx(expected, abs=1e-9)


def test_token_nll_needs_a_score():
    with pytest.raises(ValueError):
        token_nll(TokenStep("a", None, (), 0))


@pytest.mark.parametrize("mode", ["raw", "renormalized"])
def test_entropy_uniform_and_one_hot(mode):
    uniform = step_with({c: 0.2 for c in "abcde"})
    assert token_entropy(uniform, mode) == pytest.approx(LN5, abs=1e-9)
    assert token_entropy(step_with({"a": 1.0}), mode) == 0.0


def test_entropy_of_partial_mass():
    s = step_with({"a": 0.5, "b": 0.25})
    assert token_entropy(s, "raw") == pytest.approx(0.6931471805599453, abs=1e-9)
    assert token_entropy(s, "renormalized") == pytest.approx(0.6365141682948128, abs=1e-9)


def test_entropy_skips_zero_mass_entries():
    s = TokenStep("a", math.log(0.5), (("a", math.log(0.5)), ("b", math.log(0.5)), ("c", -1e6)), 0)
    assert zero_mass_entries(s) == 1
    assert token_entropy(s) == pytest.approx(math.log(2), abs=1e-12)
    assert not math.isnan(token_entropy(s, "renormalized"))


def test_entropy_rejects_empty_topk_and_bad_mode():
    with pytest.raises(ValueError):
        token_entropy(TokenStep("a", None, (), 0))
    with pytest.raises(ValueError):
        token_entropy(step_with({"a": 1.0}), "bits")


def test_raw_entropy_identity_on_random_subdistributions():
    rng = random.Random(7)
    for _ in range(500):
        k = rng.randint(1, 6)
        w = [rng.random() + 1e-3 for _ in range(k)]
        mass = rng.uniform(0.05, 1.0)
        probs = {f"t{i}": x / sum(w) * mass for i, x in enumerate(w)}
        s = step_with(probs)
        raw, ren = token_entropy(s, "raw"), token_entropy(s, "renormalized")
        assert raw == pytest.approx(mass * ren - mass * math.log(mass), abs=1e-9)
        assert 0 <= ren <= math.log(k) + 1e-12


def test_sentence_scores_two_tokens():
    g = gen_from_probs([("x", {"x": 0.9, "y": 0.1}), ("y", {"x": 0.9, "y": 0.1})])
    (s,) = sentence_scores(g, split_sentences(g))
    assert s.max_nll == pytest.approx(2.302585092994046, abs=1e-9)
    assert s.avg_nll == pytest.approx((0.10536051565782628 + 2.302585092994046) / 2, abs=1e-9)
    assert s.avg_nll == pytest.approx(1.2039728043259361, abs=1e-9)


def test_sentence_scores_certain_and_uniform():
    g = gen_from_probs([("a", {"a": 1.0}), ("b", {"b": 1.0})])
    (s,) = sentence_scores(g, split_sentences(g))
    assert s == SpanScores(0.0, 0.0, 0.0, 0.0)
    u = {c: 0.2 for c in "abcde"}
    g = gen_from_probs([("a", u), ("b", u)])
    (s,) = sentence_scores(g, split_sentences(g))
    assert s.max_ent == pytest.approx(LN5, abs=1e-12) and s.avg_ent == pytest.approx(LN5, abs=1e-12)


def test_sentence_scores_rejects_empty_span():
    g = gen_from_probs([("a", {"a": 1.0})])
    with pytest.raises(ValueError):
        sentence_scores(g, [SentenceSpan(0, 0, "")])


def test_passage_score_means():
    spans = [SpanScores(0, 1.0, 0.5, 0), SpanScores(0, 3.0, 0.7, 0), SpanScores(0, 2.0, 0.9, 0)]
    assert passage_score(spans[:2], "avg_nll") == 2.0
    assert passage_score(spans[:1], "max_ent") == 0.5
    assert passage_score(spans, "max_ent") == pytest.approx(0.7, abs=1e-12)
    with pytest.raises(ValueError):
        passage_score([], "avg_nll")


def test_split_sentences_rules():
    g = gen_from_probs([(t, {t: 1.0}) for t in ["A", ".", " B", "."]])
    spans = split_sentences(g)
    assert [(s.start_step, s.end_step, s.text) for s in spans] == [(0, 2, "A."), (2, 4, " B.")]
    g2 = gen_from_probs([(t, {t: 1.0}) for t in ["no", " stop", " here"]])
    assert len(split_sentences(g2)) == 1
    g3 = gen_from_probs([(t, {t: 1.0}) for t in ["x", ".", "y", "!", "z"]])
    assert [(s.start_step, s.end_step) for s in split_sentences(g3)] == [(0, 2), (2, 4), (4, 5)]
    assert len(split_sentences(g3, task="codegen")) == 1


def test_passage_score_averages_sentences():
    # sentence 1: "a ." with p 0.5, 1.0; sentence 2: "b" with p 0.25
    g = gen_from_probs([("a", {"a": 0.5, "z": 0.5}), (".", {".": 1.0}), ("b", {"b": 0.25, "y": 0.75})])
    expected = (math.log(2) + math.log(4)) / 2
    assert single_inference_score(g, "max_prob") == pytest.approx(expected, abs=1e-12)
    expected_avg = (math.log(2) / 2 + math.log(4)) / 2
    assert single_inference_score(g, "avg_prob") == pytest.approx(expected_avg, abs=1e-12)
    # as code the whole output is one span
    assert single_inference_score(g, "max_prob", task="codegen") == pytest.approx(math.log(4), abs=1e-12)


def test_zero_token_generation_is_an_error():
    g = Generation("p", "", (), 0.0, None, "t")
    with pytest.raises(ValueError):
        single_inference_score(g, "avg_ent")


def test_span_invariants_on_random_generations():
    rng = random.Random(3)
    for _ in range(200):
        steps = []
        for _ in range(rng.randint(1, 12)):
            w = [rng.random() + 0.01 for _ in range(4)]
            probs = {t: x / sum(w) for t, x in zip("ab.c", w)}
            steps.append((rng.choice("ab.c"), probs))
        g = gen_from_probs(steps)
        for s in sentence_scores(g, split_sentences(g)):
            assert s.max_nll >= s.avg_nll - 1e-12
            assert s.max_ent >= s.avg_ent - 1e-12
        shuffled = steps[:]
        rng.shuffle(shuffled)
        g2 = gen_from_probs(shuffled)
        a = sentence_scores(g, [SentenceSpan(0, len(steps), "")])[0]
        b = sentence_scores(g2, [SentenceSpan(0, len(steps), "")])[0]
        for f in ("max_nll", "avg_nll", "max_ent", "avg_ent"):
            assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-12)
