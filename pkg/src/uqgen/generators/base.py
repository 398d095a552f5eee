from __future__ import annotations

import math
import random
from typing import Sequence

from ..core import Generation, Prompt
from ..errors import CapabilityError

CAP_LOGPROBS = "logprobs"
CAP_TOPK = "topk"
CAP_FORCED = "forced_prefix"
CAP_SEEDED = "seeded_sampling"


def temperature_scale(dist: Sequence[tuple[str, float]], t: float) -> list[tuple[str, float]]:
    """Rescale a distribution by temperature: ``p_i^(1/t) / sum_j p_j^(1/t)``.

    ``t == 0`` gives a one-hot on the argmax, ties going to the
    lexicographically smallest token.
    """
    if t < 0:
        raise ValueError("temperature must be >= 0")
    if not dist:
        return []
    if t == 0:
        best = min(dist, key=lambda e: (-e[1], e[0]))[0]
        return [(tok, 1.0 if tok == best else 0.0) for tok, _ in dist]
    logs = [math.log(p) / t if p > 0 else -math.inf for _, p in dist]
    top = max(logs)
    weights = [math.exp(l - top) if l != -math.inf else 0.0 for l in logs]
    total = math.fsum(weights)
    return [(tok, w / total) for (tok, _), w in zip(dist, weights)]


def pick_token(dist: Sequence[tuple[str, float]], t: float, rng: random.Random) -> str:
    """Greedy pick at ``t == 0``, otherwise one draw from the temperature-scaled distribution."""
    if t == 0:
        return min(dist, key=lambda e: (-e[1], e[0]))[0]
    scaled = temperature_scale(dist, t)
    u = rng.random()
    acc = 0.0
    last = None
    for tok, p in scaled:
        if p <= 0:
            continue
        acc += p
        last = tok
        if u < acc:
            return tok
    return last


class Generator:
    """A text generator exposing per-token logprobs and top-k alternatives.

    Subclasses implement :meth:`generate` and, when they declare the
    ``forced_prefix`` capability, :meth:`generate_forced`.
    """

    id: str = "generator"
    capabilities: frozenset[str] = frozenset()
    max_topk: int = 0
    joiner: str = ""

    def prompt_key(self, prompt: Prompt) -> str:
        """What the backend conditions on; used as the prompt part of cache keys."""
        return prompt.text

    def check_topk(self, topk: int) -> None:
        if topk > self.max_topk:
            raise CapabilityError(f"{self.id}: topk={topk} exceeds backend maximum {self.max_topk}")

    def generate(
        self,
        prompt: Prompt,
        temperature: float = 0.0,
        seed: int | None = None,
        max_tokens: int = 64,
        topk: int = 5,
    ) -> Generation:
        raise NotImplementedError

    def generate_forced(
        self,
        prompt: Prompt,
        forced_prefix: Sequence[str],
        temperature: float = 0.0,
        seed: int | None = None,
        max_tokens: int = 64,
        topk: int = 5,
    ) -> Generation:
        raise CapabilityError(f"{self.id}: forced-prefix continuation not supported")
