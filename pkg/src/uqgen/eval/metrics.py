"""Performance and association metrics: semantic similarity, code quality Q, Pearson/Spearman, AUC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.stats import rankdata

from ..distance.embedding import EmbeddingProvider, embed_cos


class UndefinedMetric(ValueError):
    """The statistic is undefined for this input (constant series, single class, too few points)."""


@dataclass(frozen=True)
class JudgeResult:
    syntax_ok: bool
    tests_total: int
    tests_passed: int
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.tests_total < 0 or not 0 <= self.tests_passed <= self.tests_total:
            raise ValueError(f"invalid judge counts: {self.tests_passed}/{self.tests_total}")


def semantic_performance(output: str, references: Sequence[str], provider: EmbeddingProvider) -> float:
    """Best embedding-cosine similarity (mapped to [0, 1]) against any reference."""
    if not references:
        raise ValueError("semantic performance needs at least one reference")
    return max(embed_cos(output, ref, provider) for ref in references)


def q_score(j: JudgeResult) -> float:
    """Code quality: mean of the syntax indicator and the test pass rate (0 when there are no tests)."""
    q_syntax = 1.0 if j.syntax_ok else 0.0
    q_semantics = j.tests_passed / j.tests_total if j.tests_total else 0.0
    return (q_syntax + q_semantics) / 2


def label_code(j: JudgeResult) -> int:
    """0 for completely correct code (Q = 1), 1 otherwise."""
    return 0 if q_score(j) == 1.0 else 1


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 3:
        raise UndefinedMetric(f"pearson needs at least 3 points, got {n}")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedMetric("pearson undefined for a constant series")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    return pearson(list(rankdata(xs)), list(rankdata(ys)))


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """P(random positive outranks random negative), ties counting one half.

    Computed from average ranks (Mann-Whitney U).
    """
    if len(scores) != len(labels):
        raise ValueError(f"length mismatch: {len(scores)} vs {len(labels)}")
    if any(lab not in (0, 1) for lab in labels):
        raise ValueError("labels must be 0 or 1")
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetric("auc needs both classes present")
    ranks = rankdata(scores)
    rank_sum = math.fsum(r for r, lab in zip(ranks, labels) if lab == 1)
    return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)
