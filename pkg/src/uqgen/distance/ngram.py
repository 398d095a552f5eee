"""Whitespace-tokenized n-gram similarities: sentence BLEU, ROUGE-L and bag-of-tokens F1.

All return a similarity in [0, 1]; the matching distance is ``1 - similarity``.
Empty inputs score 0.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from typing import Callable, Mapping, Sequence

log = logging.getLogger(__name__)


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Split on Unicode whitespace; lowercase unless told otherwise (code keeps case)."""
    if lowercase:
        text = text.lower()
    return text.split()


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len == 0:
        return 0.0
    if cand_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def _geometric_bleu(precisions: list[tuple[float, float]], smoothing: bool, bp: float) -> float:
    """Combine (matched, total) pairs per order into BLEU.

    Orders with no candidate n-grams are left out of the geometric mean
    (effective order); add-one smoothing applies from bigrams up.
    """
    logs = []
    for order, (matched, total) in enumerate(precisions, start=1):
        if total == 0:
            continue
        if smoothing and order >= 2:
            matched, total = matched + 1, total + 1
        if matched == 0:
            return 0.0
        logs.append(math.log(matched / total))
    if not logs:
        return 0.0
    return bp * math.exp(math.fsum(logs) / len(logs))


def bleu_tokens(
    cand: Sequence[str],
    ref: Sequence[str],
    max_n: int = 4,
    smoothing: bool = True,
    token_weight: Callable[[str], float] | None = None,
) -> float:
    """Sentence BLEU on token lists with clipped n-gram precision.

    ``token_weight`` reweights unigram matches (CodeBLEU's keyword-weighted variant).
    """
    if not cand or not ref:
        return 0.0
    precisions = []
    for n in range(1, max_n + 1):
        c_counts = ngram_counts(cand, n)
        r_counts = ngram_counts(ref, n)
        if n == 1 and token_weight is not None:
            matched = math.fsum(token_weight(g[0]) * min(c, r_counts[g]) for g, c in c_counts.items())
            total = math.fsum(token_weight(g[0]) * c for g, c in c_counts.items())
        else:
            matched = sum(min(c, r_counts[g]) for g, c in c_counts.items())
            total = sum(c_counts.values())
        precisions.append((matched, total))
    return _geometric_bleu(precisions, smoothing, brevity_penalty(len(cand), len(ref)))


def bleu(candidate: str, reference: str, max_n: int = 4, smoothing: bool = True, lowercase: bool = True) -> float:
    cand, ref = tokenize(candidate, lowercase), tokenize(reference, lowercase)
    if not cand or not ref:
        log.debug("bleu: empty input, similarity 0")
        return 0.0
    return bleu_tokens(cand, ref, max_n=max_n, smoothing=smoothing)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str, beta: float = 1.0, lowercase: bool = True) -> float:
    cand, ref = tokenize(candidate, lowercase), tokenize(reference, lowercase)
    if not cand or not ref:
        log.debug("rouge_l: empty input, similarity 0")
        return 0.0
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    b2 = beta * beta
    return (1 + b2) * p * r / (r + b2 * p)


def token_f1(candidate: str, reference: str, lowercase: bool = True) -> float:
    cand, ref = tokenize(candidate, lowercase), tokenize(reference, lowercase)
    if not cand or not ref:
        log.debug("token_f1: empty input, similarity 0")
        return 0.0
    overlap = sum((Counter(cand) & Counter(ref)).values())
    if overlap == 0:
        return 0.0
    p = overlap / len(cand)
    r = overlap / len(ref)
    return 2 * p * r / (p + r)


def weighted_unigram_fn(keywords: Mapping[str, float] | frozenset[str], keyword_weight: float = 5.0):
    kw = set(keywords)
    return lambda tok: keyword_weight if tok in kw else 1.0
