"""Multi-inference uncertainty: variation ratio (VR) and variation ratio to the original (VRO).

Inference sets come from two sources:

* ``sample`` -- T generations at temperature t > 0 with fixed seeds; the
  greedy (t = 0) original is kept alongside for VRO.
* ``perturb`` -- the token at an interest point of the greedy original is
  swapped for each of its top alternatives and the continuation re-decoded
  greedily. By default the original counts as one of the T members.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .core import Generation, Prompt
from .errors import CapabilityError, InferenceError, UQGenError
from .generators.base import CAP_FORCED, Generator
from .token_scores import token_entropy

SOURCES = ("sample", "perturb")
STRATEGIES = ("max_ent", "min_ent", "max_diff")

Distance = Callable[[str, str], float]


@dataclass(frozen=True)
class InferenceSet:
    original: Generation
    variants: tuple[Generation, ...]
    source: str
    weights: tuple[float, ...] | None = None
    include_original: bool = True
    perturb_meta: dict[str, Any] | None = field(default=None)

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown inference source {self.source!r}")
        n = len(self.members)
        if n < 2:
            raise ValueError(f"an inference set needs T >= 2 members, got {n}")
        if self.weights is not None:
            if len(self.weights) != n:
                raise ValueError(f"{len(self.weights)} weights for {n} members")
            if any(w < 0 for w in self.weights) or not any(w > 0 for w in self.weights):
                raise ValueError("weights must be nonnegative and not all zero")

    @property
    def members(self) -> tuple[Generation, ...]:
        """The T generations VR and VRO range over."""
        if self.source == "perturb" and self.include_original:
            return (self.original,) + tuple(self.variants)
        return tuple(self.variants)

    @property
    def T(self) -> int:
        return len(self.members)


def vr_from_similarities(sim: Sequence[Sequence[float]], weights: Sequence[float] | None = None) -> float:
    """``1 - sum_i w_i * mean_{j != i} sim[i][j] / sum_i w_i``; uniform weights by default."""
    T = len(sim)
    if T < 2:
        raise ValueError("VR needs at least two members")
    w = [1.0] * T if weights is None else [float(x) for x in weights]
    inner = [math.fsum(sim[i][j] for j in range(T) if j != i) / (T - 1) for i in range(T)]
    agreement = math.fsum(wi * s for wi, s in zip(w, inner)) / math.fsum(w)
    return min(1.0, max(0.0, 1.0 - agreement))


def vro_from_similarities(to_original: Sequence[float]) -> float:
    """``1 - mean_i sim(member_i, original)``."""
    if not to_original:
        raise ValueError("VRO needs at least one member")
    return min(1.0, max(0.0, 1.0 - math.fsum(to_original) / len(to_original)))


def _check_texts(gens: Sequence[Generation]) -> None:
    for i, g in enumerate(gens):
        if not g.text.strip():
            raise ValueError(f"member {i} (prompt {g.prompt_id!r}, seed {g.seed}) has empty text")


def similarity_matrix(texts: Sequence[str], d: Distance) -> list[list[float]]:
    T = len(texts)
    sim = [[1.0] * T for _ in range(T)]
    for i in range(T):
        for j in range(T):
            if i != j:
                sim[i][j] = 1.0 - d(texts[i], texts[j])
    return sim


def vr(inf: InferenceSet, d: Distance) -> float:
    members = inf.members
    _check_texts(members)
    return vr_from_similarities(similarity_matrix([g.text for g in members], d), inf.weights)


def vro(inf: InferenceSet, d: Distance) -> float:
    members = inf.members
    _check_texts(members)
    _check_texts([inf.original])
    ref = inf.original.text
    return vro_from_similarities([1.0 - d(g.text, ref) for g in members])


def _run_ordered(calls: Sequence[Callable[[], Generation]], parallelism: int) -> list[Generation]:
    """Run calls (possibly concurrently) and return results in call order.

    On failure raises InferenceError with the generations that did succeed.
    """
    results: list[Generation | None] = [None] * len(calls)
    errors: list[tuple[int, Exception]] = []
    if parallelism <= 1 or len(calls) <= 1:
        for i, call in enumerate(calls):
            try:
                results[i] = call()
            except UQGenError as exc:
                errors.append((i, exc))
    else:
        with ThreadPoolExecutor(max_workers=min(parallelism, len(calls))) as pool:
            futures = [pool.submit(call) for call in calls]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except UQGenError as exc:
                    errors.append((i, exc))
    if errors:
        i, exc = errors[0]
        raise InferenceError(
            f"{len(errors)} of {len(calls)} inferences failed (first: #{i}: {exc})",
            partial=[g for g in results if g is not None],
        ) from exc
    return results  # type: ignore[return-value]


def sample_inferences(
    gen: Generator,
    prompt: Prompt,
    T: int = 5,
    t: float = 0.7,
    seeds: Sequence[int] | int = 0,
    max_tokens: int = 64,
    topk: int = 5,
    parallelism: int = 1,
    original: Generation | None = None,
) -> InferenceSet:
    """Greedy original plus T samples at temperature ``t``, one per seed.

    An int ``seeds`` expands to ``seeds, seeds + 1, ..., seeds + T - 1``.
    """
    if T < 2:
        raise ValueError(f"sample-based inference needs T >= 2, got {T}")
    if t <= 0:
        raise ValueError(f"sample-based inference needs t > 0, got {t}")
    seed_list = [seeds + i for i in range(T)] if isinstance(seeds, int) else list(seeds)
    if len(seed_list) != T:
        raise ValueError(f"expected {T} seeds, got {len(seed_list)}")
    if original is None:
        original = _run_ordered([lambda: gen.generate(prompt, 0.0, None, max_tokens, topk)], 1)[0]
    calls = [
        (lambda s=s: gen.generate(prompt, t, s, max_tokens, topk)) for s in seed_list
    ]
    variants = _run_ordered(calls, parallelism)
    return InferenceSet(original, tuple(variants), "sample")


def select_point_from_entropies(entropies: Sequence[float], strategy: str) -> int:
    """Interest point: argmax / argmin entropy, or argmax of the entropy gain over the previous token.

    Ties go to the earliest position.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown interest-point strategy {strategy!r}")
    if not entropies:
        raise ValueError("no tokens to perturb")
    if strategy == "max_ent":
        return max(range(len(entropies)), key=lambda j: (entropies[j], -j))
    if strategy == "min_ent":
        return min(range(len(entropies)), key=lambda j: (entropies[j], j))
    if len(entropies) < 2:
        raise ValueError("max_diff needs at least two tokens")
    gains = {j: entropies[j] - entropies[j - 1] for j in range(1, len(entropies))}
    return max(gains, key=lambda j: (gains[j], -j))


def select_perturb_point(g: Generation, strategy: str, mode: str = "raw") -> int:
    return select_point_from_entropies([token_entropy(s, mode) for s in g.steps], strategy)


def perturb_inferences(
    gen: Generator,
    prompt: Prompt,
    original: Generation,
    strategy: str,
    T: int = 5,
    include_original: bool = True,
    max_tokens: int = 64,
    topk: int = 5,
    mode: str = "raw",
    parallelism: int = 1,
) -> InferenceSet:
    """Swap the interest-point token for its most likely alternatives and re-decode greedily."""
    if CAP_FORCED not in gen.capabilities:
        raise CapabilityError(f"{gen.id}: backend cannot continue from a forced prefix")
    if T < 2:
        raise ValueError(f"perturbation-based inference needs T >= 2, got {T}")
    pos = select_perturb_point(original, strategy, mode)
    step = original.steps[pos]
    stop = getattr(gen, "stop_token", None)
    alternatives = [tok for tok, _ in step.topk if tok != step.token and tok != stop]
    need = T - 1 if include_original else T
    if len(alternatives) < need:
        raise InferenceError(
            f"{len(alternatives)} alternatives available at position {pos} ({strategy}); need {need}"
        )
    chosen = alternatives[:need]
    prefix = original.tokens[:pos]
    calls = [
        (lambda alt=alt: gen.generate_forced(prompt, prefix + [alt], 0.0, None, max_tokens, topk))
        for alt in chosen
    ]
    variants = _run_ordered(calls, parallelism)
    meta = {
        "position": pos,
        "strategy": strategy,
        "original_token": step.token,
        "substituted_tokens": chosen,
    }
    return InferenceSet(original, tuple(variants), "perturb", include_original=include_original, perturb_meta=meta)
