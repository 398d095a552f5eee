"""Text-pair similarity metrics and the distance functions built on them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from ..errors import ConfigError
from .codebleu import DEFAULT_WEIGHTS, codebleu, register_dataflow_provider
from .embedding import (
    EmbeddingProvider,
    HashedBagProvider,
    RemoteEmbeddingProvider,
    default_provider,
    embed_cos,
    make_provider,
)
from .ngram import bleu, rouge_l, token_f1, tokenize
from .syntax import SyntaxNode, get_syntax_provider, register_syntax_provider

DISTANCE_IDS = ("bleu", "rouge_l", "token_f1", "codebleu", "embed_cos")

# task-specific distance used inside VR/VRO when the config says "auto"
TASK_DISTANCE = {
    "qa": "token_f1",
    "summarization": "rouge_l",
    "translation": "bleu",
    "codegen": "codebleu",
    "other": "embed_cos",
}


@dataclass(frozen=True)
class DistanceFn:
    """``dist(a, b) = 1 - similarity(a, b)``, clamped to [0, 1]."""

    id: str
    similarity: Callable[[str, str], float] = field(compare=False, repr=False)
    params: dict[str, Any] = field(default_factory=dict)

    def __call__(self, a: str, b: str) -> float:
        return min(1.0, max(0.0, 1.0 - self.similarity(a, b)))


def make_distance(
    distance_id: str,
    task: str | None = None,
    *,
    bleu_smoothing: bool = True,
    lang: str = "toy",
    weights=DEFAULT_WEIGHTS,
    provider: EmbeddingProvider | None = None,
) -> DistanceFn:
    """Resolve a distance id (or ``auto`` with a task) into a DistanceFn."""
    if distance_id == "auto":
        distance_id = TASK_DISTANCE.get(task or "other", "embed_cos")
    lower = task != "codegen"
    if distance_id == "bleu":
        return DistanceFn(
            "bleu",
            lambda a, b: bleu(a, b, smoothing=bleu_smoothing, lowercase=lower),
            {"max_n": 4, "smoothing": bleu_smoothing, "lowercase": lower},
        )
    if distance_id == "rouge_l":
        return DistanceFn("rouge_l", lambda a, b: rouge_l(a, b, lowercase=lower), {"beta": 1.0, "lowercase": lower})
    if distance_id == "token_f1":
        return DistanceFn("token_f1", lambda a, b: token_f1(a, b, lowercase=lower), {"lowercase": lower})
    if distance_id == "codebleu":
        get_syntax_provider(lang)
        w = tuple(weights)
        return DistanceFn(
            "codebleu",
            lambda a, b: codebleu(a, b, lang, w, smoothing=bleu_smoothing, strict_reference=False),
            {"lang": lang, "weights": list(w), "smoothing": bleu_smoothing},
        )
    if distance_id == "embed_cos":
        prov = provider or default_provider()
        return DistanceFn("embed_cos", lambda a, b: embed_cos(a, b, prov), {"provider": prov.id})
    raise ConfigError(f"unknown distance {distance_id!r}; expected one of {', '.join(DISTANCE_IDS)} or auto")


__all__ = [
    "DISTANCE_IDS",
    "TASK_DISTANCE",
    "DistanceFn",
    "EmbeddingProvider",
    "HashedBagProvider",
    "RemoteEmbeddingProvider",
    "SyntaxNode",
    "bleu",
    "codebleu",
    "default_provider",
    "embed_cos",
    "get_syntax_provider",
    "make_distance",
    "make_provider",
    "register_dataflow_provider",
    "register_syntax_provider",
    "rouge_l",
    "token_f1",
    "tokenize",
]
