"""CodeBLEU: n-gram, keyword-weighted n-gram, syntax-subtree and (optional) dataflow match."""

from __future__ import annotations

import math
from collections import Counter
from typing import Protocol, Sequence

from ..errors import ConfigError, ParseFailure
from .ngram import bleu_tokens, tokenize, weighted_unigram_fn
from .syntax import SyntaxNode, get_syntax_provider

DEFAULT_WEIGHTS = (0.25, 0.25, 0.25, 0.25)
KEYWORD_WEIGHT = 5.0
SUBTREE_DEPTH = 3


class DataflowProvider(Protocol):
    def match(self, candidate: str, reference: str, lang: str) -> float: ...


_DATAFLOW: dict[str, DataflowProvider] = {}


def register_dataflow_provider(lang: str, provider: DataflowProvider | None) -> None:
    if provider is None:
        _DATAFLOW.pop(lang.lower(), None)
    else:
        _DATAFLOW[lang.lower()] = provider


def truncated(node: SyntaxNode, depth: int) -> tuple:
    if depth <= 1 or not node.children:
        return (node.kind,)
    return (node.kind, tuple(truncated(c, depth - 1) for c in node.children))


def subtrees(tree: SyntaxNode, depth: int = SUBTREE_DEPTH) -> Counter:
    """Multiset of depth-limited subtree shapes rooted at every internal node."""
    return Counter(truncated(n, depth) for n in tree.walk() if n.children)


def syntax_match(cand_tree: SyntaxNode, ref_tree: SyntaxNode, depth: int = SUBTREE_DEPTH) -> float:
    cand = subtrees(cand_tree, depth)
    total = sum(cand.values())
    if total == 0:
        return 0.0
    ref = subtrees(ref_tree, depth)
    return sum((cand & ref).values()) / total


def _check_weights(weights: Sequence[float]) -> tuple[float, float, float, float]:
    if len(weights) != 4 or any(w < 0 for w in weights) or not math.isclose(math.fsum(weights), 1.0, abs_tol=1e-9):
        raise ConfigError(f"codebleu weights must be 4 nonnegative reals summing to 1, got {tuple(weights)}")
    return tuple(float(w) for w in weights)  # type: ignore[return-value]


def codebleu_components(
    candidate: str,
    reference: str,
    lang: str,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
    smoothing: bool = True,
    strict_reference: bool = True,
) -> dict[str, float]:
    """Per-component scores; components with zero weight are not computed.

    An unparseable reference raises ParseFailure when ``strict_reference``;
    otherwise the syntax component is left out.
    """
    w = _check_weights(weights)
    provider = get_syntax_provider(lang)
    cand = tokenize(candidate, lowercase=False)
    ref = tokenize(reference, lowercase=False)
    out: dict[str, float] = {}
    if w[0] > 0:
        out["ngram"] = bleu_tokens(cand, ref, smoothing=smoothing)
    if w[1] > 0:
        out["weighted_ngram"] = bleu_tokens(
            cand, ref, smoothing=smoothing, token_weight=weighted_unigram_fn(provider.keywords, KEYWORD_WEIGHT)
        )
    if w[2] > 0:
        try:
            ref_tree = provider.parse(reference)
        except ParseFailure:
            if strict_reference:
                raise
            ref_tree = None
        if ref_tree is not None:
            try:
                cand_tree = provider.parse(candidate)
            except ParseFailure:
                out["syntax"] = 0.0
            else:
                out["syntax"] = syntax_match(cand_tree, ref_tree)
    if w[3] > 0 and lang.lower() in _DATAFLOW:
        out["dataflow"] = float(_DATAFLOW[lang.lower()].match(candidate, reference, lang))
    return out


def codebleu(
    candidate: str,
    reference: str,
    lang: str = "toy",
    weights: Sequence[float] = DEFAULT_WEIGHTS,
    smoothing: bool = True,
    strict_reference: bool = True,
) -> float:
    """Weighted CodeBLEU similarity.

    Without a registered dataflow provider the dataflow weight is dropped and
    the remaining weights renormalized.
    """
    if not candidate.strip() or not reference.strip():
        return 0.0
    w = _check_weights(weights)
    parts = codebleu_components(candidate, reference, lang, w, smoothing, strict_reference)
    names = ("ngram", "weighted_ngram", "syntax", "dataflow")
    used = [(w[i], parts[name]) for i, name in enumerate(names) if name in parts]
    norm = math.fsum(wi for wi, _ in used)
    if norm == 0:
        return 0.0
    if norm == 1.0:
        return math.fsum(wi * v for wi, v in used)
    return math.fsum(wi * v for wi, v in used) / norm
