"""Compute any subset of the twelve uncertainty methods for one prompt.

Inference sets are shared: Sample VR and Sample VRO reuse the same T samples,
and the VR/VRO pair of each perturbation strategy reuses one perturbed set.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from .core import Generation, MethodId, Prompt, UncertaintyScore
from .distance import DistanceFn, EmbeddingProvider, make_distance
from .divergence import InferenceSet, perturb_inferences, sample_inferences, vr, vro
from .errors import UQGenError
from .generators.base import Generator
from .token_scores import DEFAULT_TERMINATORS, single_inference_score, zero_mass_entries


@dataclass
class ScoreRun:
    original: Generation
    scores: list[UncertaintyScore]
    timing: dict[str, float]
    errors: dict[str, str] = field(default_factory=dict)

    def by_name(self) -> dict[str, float]:
        return {s.method.name: s.value for s in self.scores}


@dataclass
class Estimator:
    generator: Generator
    T: int = 5
    temperature: float = 0.7
    topk: int = 5
    max_tokens: int = 64
    seed: int = 0
    entropy_mode: str = "raw"
    include_original: bool = True
    parallelism: int = 1
    bleu_smoothing: bool = True
    lang: str = "toy"
    provider: EmbeddingProvider | None = None
    terminators: Sequence[str] = DEFAULT_TERMINATORS

    def distance_for(self, method: MethodId, task: str | None) -> DistanceFn:
        return make_distance(
            method.distance_id or "auto",
            task,
            bleu_smoothing=self.bleu_smoothing,
            lang=self.lang,
            provider=self.provider,
        )

    def original(self, prompt: Prompt) -> Generation:
        return self.generator.generate(prompt, 0.0, None, self.max_tokens, self.topk)

    def score(
        self,
        prompt: Prompt,
        methods: Sequence[MethodId],
        original: Generation | None = None,
    ) -> ScoreRun:
        """Score ``prompt`` with every method; per-method failures land in ``errors``."""
        task = prompt.task
        t0 = time.perf_counter()
        if original is None:
            original = self.original(prompt)
        greedy_time = time.perf_counter() - t0
        if not original.steps:
            raise UQGenError(f"prompt {prompt.id!r}: greedy generation produced no tokens")

        scores: list[UncertaintyScore] = []
        timing: dict[str, float] = {}
        errors: dict[str, str] = {}
        sets: dict[tuple, InferenceSet | Exception] = {}
        set_time: dict[tuple, float] = {}

        def inference_set(method: MethodId) -> InferenceSet:
            key = (method.family, method.point)
            if key not in sets:
                start = time.perf_counter()
                try:
                    if method.family == "sample":
                        sets[key] = sample_inferences(
                            self.generator, prompt, self.T, self.temperature, self.seed,
                            self.max_tokens, self.topk, self.parallelism, original,
                        )
                    else:
                        sets[key] = perturb_inferences(
                            self.generator, prompt, original, method.point, self.T,
                            self.include_original, self.max_tokens, self.topk,
                            self.entropy_mode, self.parallelism,
                        )
                except (UQGenError, ValueError) as exc:
                    sets[key] = exc
                set_time[key] = time.perf_counter() - start
            found = sets[key]
            if isinstance(found, Exception):
                raise found
            return found

        for method in methods:
            start = time.perf_counter()
            try:
                if method.family == "single":
                    value = single_inference_score(original, method.variant, self.entropy_mode, task, self.terminators)
                    skipped = sum(zero_mass_entries(s) for s in original.steps)
                    score = UncertaintyScore(method, value, (), {"zero_mass_skipped": skipped} if skipped else {})
                    elapsed = greedy_time
                else:
                    inf = inference_set(method)
                    d = self.distance_for(method, task)
                    value = vr(inf, d) if method.variant == "vr" else vro(inf, d)
                    meta = {"T": inf.T, "distance": d.id}
                    if inf.perturb_meta:
                        meta.update(inf.perturb_meta)
                    score = UncertaintyScore(method.with_distance(d.id), value, inf.members, meta)
                    elapsed = set_time[(method.family, method.point)]
            except (UQGenError, ValueError) as exc:
                errors[method.name] = str(exc)
                continue
            scores.append(score)
            timing[method.name] = elapsed + time.perf_counter() - start
        return ScoreRun(original, scores, timing, errors)
