"""Single-inference uncertainty: token likelihood and entropy aggregated per sentence and passage."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import Generation, TokenStep

DEFAULT_TERMINATORS = (".", "!", "?", "\n")
ENTROPY_MODES = ("raw", "renormalized")
SENTENCE_METRICS = ("max_nll", "avg_nll", "max_ent", "avg_ent")

# method variant -> sentence metric it averages over the passage
VARIANT_METRIC = {
    "max_prob": "max_nll",
    "avg_prob": "avg_nll",
    "max_ent": "max_ent",
    "avg_ent": "avg_ent",
}


@dataclass(frozen=True)
class SentenceSpan:
    start_step: int
    end_step: int
    text: str


@dataclass(frozen=True)
class SpanScores:
    max_nll: float
    avg_nll: float
    max_ent: float
    avg_ent: float


def token_nll(step: TokenStep) -> float:
    if step.logprob is None:
        raise ValueError(f"step {step.position}: no logprob for emitted token")
    return -step.logprob if step.logprob < 0 else 0.0


def zero_mass_entries(step: TokenStep) -> int:
    return sum(1 for _, lp in step.topk if math.exp(lp) == 0.0)


def token_entropy(step: TokenStep, mode: str = "raw") -> float:
    """Entropy (nats) of the step's top-k distribution.

    ``raw`` uses the top-k probabilities as they are; ``renormalized`` rescales
    them to sum to one first. Zero-mass entries are skipped.
    """
    if mode not in ENTROPY_MODES:
        raise ValueError(f"unknown entropy mode {mode!r}")
    probs = [p for p in step.topk_probs() if p > 0.0]
    if not probs:
        raise ValueError(f"step {step.position}: empty top-k distribution")
    if mode == "renormalized":
        total = math.fsum(probs)
        probs = [p / total for p in probs]
    h = -math.fsum(p * math.log(p) for p in probs)
    return max(h, 0.0)


def split_sentences(
    g: Generation,
    terminators: Sequence[str] = DEFAULT_TERMINATORS,
    task: str | None = None,
    joiner: str = "",
) -> list[SentenceSpan]:
    """Split a generation's steps into sentences after terminator-ending tokens.

    Code generations are always a single span.
    """
    n = len(g.steps)
    if n == 0:
        raise ValueError("cannot split an empty generation")
    tokens = g.tokens
    if task == "codegen":
        return [SentenceSpan(0, n, joiner.join(tokens))]
    spans = []
    start = 0
    for i, tok in enumerate(tokens):
        if tok.endswith(tuple(terminators)):
            spans.append(SentenceSpan(start, i + 1, joiner.join(tokens[start : i + 1])))
            start = i + 1
    if start < n:
        spans.append(SentenceSpan(start, n, joiner.join(tokens[start:])))
    return spans


def sentence_scores(g: Generation, spans: Sequence[SentenceSpan], mode: str = "raw") -> list[SpanScores]:
    out = []
    for span in spans:
        if not 0 <= span.start_step < span.end_step <= len(g.steps):
            raise ValueError(f"invalid or empty span [{span.start_step}, {span.end_step})")
        steps = g.steps[span.start_step : span.end_step]
        nll = [token_nll(s) for s in steps]
        ent = [token_entropy(s, mode) for s in steps]
        out.append(
            SpanScores(
                max_nll=max(nll),
                avg_nll=math.fsum(nll) / len(nll),
                max_ent=max(ent),
                avg_ent=math.fsum(ent) / len(ent),
            )
        )
    return out


def passage_score(per_span: Sequence[SpanScores], which: str) -> float:
    if which not in SENTENCE_METRICS:
        raise ValueError(f"unknown sentence metric {which!r}")
    if not per_span:
        raise ValueError("passage score needs at least one span")
    return math.fsum(getattr(s, which) for s in per_span) / len(per_span)


def single_inference_score(
    g: Generation,
    variant: str,
    mode: str = "raw",
    task: str | None = None,
    terminators: Sequence[str] = DEFAULT_TERMINATORS,
) -> float:
    """Passage-level Max Prob / Average Prob / Max Ent / Average Ent for one generation."""
    if not g.steps:
        raise ValueError(f"generation for {g.prompt_id!r} has no tokens")
    spans = split_sentences(g, terminators, task)
    return passage_score(sentence_scores(g, spans, mode), VARIANT_METRIC[variant])
