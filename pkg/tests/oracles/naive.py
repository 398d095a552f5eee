"""Deliberately naive reference implementations used to cross-check the package."""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations


def vr_double_loop(dist, texts, weights=None):
    T = len(texts)
    w = weights or [1.0] * T
    num = 0.0
    for i in range(T):
        acc = 0.0
        for j in range(T):
            if j != i:
                acc += 1.0 - dist(texts[i], texts[j])
        num += w[i] * acc / (T - 1)
    return 1.0 - num / sum(w)


def vro_loop(dist, texts, original):
    acc = 0.0
    for t in texts:
        acc += 1.0 - dist(t, original)
    return 1.0 - acc / len(texts)


def lcs_recursive(a, b):
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def lcs_brute(a, b):
    """Longest common subsequence by enumerating subsequences of the shorter list."""
    if len(a) > len(b):
        a, b = b, a
    for k in range(len(a), 0, -1):
        for idx in combinations(range(len(a)), k):
            sub = [a[i] for i in idx]
            it = iter(b)
            if all(any(x == y for y in it) for x in sub):
                return k
    return 0


def f1_bags(cand, ref):
    pool = list(ref)
    overlap = 0
    for tok in cand:
        if tok in pool:
            pool.remove(tok)
            overlap += 1
    if not cand or not ref or overlap == 0:
        return 0.0
    p, r = overlap / len(cand), overlap / len(ref)
    return 2 * p * r / (p + r)


def clipped_precision(cand, ref, n):
    grams_c = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
    grams_r = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    matched = 0
    for g in set(grams_c):
        matched += min(grams_c.count(g), grams_r.count(g))
    return matched, len(grams_c)


def bleu_naive(cand, ref, max_n=4, smoothing=True):
    if not cand or not ref:
        return 0.0
    log_sum, used = 0.0, 0
    for n in range(1, max_n + 1):
        m, t = clipped_precision(cand, ref, n)
        if t == 0:
            continue
        if smoothing and n > 1:
            m, t = m + 1, t + 1
        if m == 0:
            return 0.0
        log_sum += math.log(m / t)
        used += 1
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(log_sum / used)


def auc_pairs(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))
