"""Domain types: prompts, token-level probability records, generations, method ids."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

TASKS = ("qa", "summarization", "translation", "codegen", "other")
FINISH_REASONS = ("stop", "length", "error")

FAMILIES = ("single", "sample", "perturb")
SINGLE_VARIANTS = ("max_prob", "avg_prob", "max_ent", "avg_ent")
MULTI_VARIANTS = ("vr", "vro")
POINTS = ("max_ent", "min_ent", "max_diff")

MASS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Prompt:
    id: str
    text: str
    task: str = "other"
    template_id: str | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"prompt {self.id!r}: text must be non-empty")
        if self.task not in TASKS:
            raise ValueError(f"prompt {self.id!r}: unknown task {self.task!r}")


@dataclass(frozen=True)
class TokenStep:
    """One emitted token and the top-k distribution it was drawn from.

    ``logprob`` is ``None`` only for tokens whose score the backend could not
    report (forced tokens under prompt-concatenation emulation); such steps
    carry an empty ``topk``.
    """

    token: str
    logprob: float | None
    topk: tuple[tuple[str, float], ...]
    position: int

    @property
    def prob(self) -> float:
        if self.logprob is None:
            raise ValueError(f"step {self.position}: logprob unavailable")
        return math.exp(self.logprob)

    def topk_probs(self) -> list[float]:
        return [math.exp(lp) for _, lp in self.topk]


def make_step(
    token: str,
    logprob: float | None,
    topk: Iterable[tuple[str, float]],
    position: int,
) -> tuple[TokenStep, bool]:
    """Build a TokenStep with topk sorted descending and the emitted token present.

    Returns the step and whether the emitted token had to be injected into topk.
    """
    entries = sorted(((str(t), float(lp)) for t, lp in topk), key=lambda e: (-e[1], e[0]))
    injected = False
    if logprob is not None and all(t != token for t, _ in entries):
        entries.append((token, float(logprob)))
        entries.sort(key=lambda e: (-e[1], e[0]))
        injected = True
    return TokenStep(token, None if logprob is None else float(logprob), tuple(entries), position), injected


@dataclass(frozen=True)
class Generation:
    prompt_id: str
    text: str
    steps: tuple[TokenStep, ...]
    temperature: float
    seed: int | None
    backend_id: str
    finish_reason: str = "stop"
    meta: dict[str, Any] = field(default_factory=dict, compare=True)

    @property
    def tokens(self) -> list[str]:
        return [s.token for s in self.steps]


def detokenize(tokens: Sequence[str], joiner: str = "") -> str:
    return joiner.join(tokens)


def validate_generation(g: Generation, joiner: str = "") -> list[str]:
    """Return one description per broken Generation/TokenStep invariant (empty if valid)."""
    problems: list[str] = []
    if g.temperature < 0:
        problems.append("temperature: temperature < 0")
    if g.finish_reason not in FINISH_REASONS:
        problems.append(f"finish_reason: unknown value {g.finish_reason!r}")
    if detokenize(g.tokens, joiner) != g.text:
        problems.append("text: detokenized steps differ from text")
    for i, step in enumerate(g.steps):
        where = f"steps[{i}]"
        if step.position != i:
            problems.append(f"{where}.position: expected {i}, got {step.position}")
        if step.logprob is not None and step.logprob > 0:
            problems.append(f"{where}.logprob: logprob > 0")
        if any(lp > 0 for _, lp in step.topk):
            problems.append(f"{where}.topk: logprob > 0")
        lps = [lp for _, lp in step.topk]
        if any(a < b for a, b in zip(lps, lps[1:])):
            problems.append(f"{where}.topk: not sorted by logprob descending")
        # a step without a logprob is an unscored forced token; nothing to cross-check
        if step.logprob is not None:
            match = [lp for t, lp in step.topk if t == step.token]
            if not match:
                problems.append(f"{where}.topk: emitted token missing")
            elif abs(match[0] - step.logprob) > 1e-9:
                problems.append(f"{where}.topk: emitted token logprob mismatch")
        mass = math.fsum(math.exp(lp) for lp in lps)
        if mass > 1 + MASS_TOLERANCE:
            problems.append(f"{where}.topk: topk mass > 1 ({mass:.6f})")
    return problems


# -- cache record format --------------------------------------------------


def generation_to_record(g: Generation) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "prompt_id": g.prompt_id,
        "text": g.text,
        "temperature": g.temperature,
        "seed": g.seed,
        "backend_id": g.backend_id,
        "finish_reason": g.finish_reason,
        "steps": [
            {
                "token": s.token,
                "logprob": s.logprob,
                "position": s.position,
                "topk": [[t, lp] for t, lp in s.topk],
            }
            for s in g.steps
        ],
    }
    if g.meta:
        rec["meta"] = g.meta
    return rec


def generation_from_record(rec: dict[str, Any]) -> Generation:
    steps = tuple(
        TokenStep(
            token=s["token"],
            logprob=None if s["logprob"] is None else float(s["logprob"]),
            topk=tuple((t, float(lp)) for t, lp in s["topk"]),
            position=int(s["position"]),
        )
        for s in rec["steps"]
    )
    return Generation(
        prompt_id=rec["prompt_id"],
        text=rec["text"],
        steps=steps,
        temperature=float(rec["temperature"]),
        seed=rec.get("seed"),
        backend_id=rec["backend_id"],
        finish_reason=rec.get("finish_reason", "stop"),
        meta=dict(rec.get("meta") or {}),
    )


def dumps_generation(g: Generation) -> str:
    return json.dumps(generation_to_record(g), ensure_ascii=False, sort_keys=True)


def loads_generation(line: str) -> Generation:
    return generation_from_record(json.loads(line))


# -- method identifiers ---------------------------------------------------

_POINT_PREFIX = {"max_ent": "max", "min_ent": "min", "max_diff": "maxdiff"}
_PREFIX_POINT = {v: k for k, v in _POINT_PREFIX.items()}
_DISPLAY_SINGLE = {
    "max_prob": "Max Prob",
    "avg_prob": "Average Prob",
    "max_ent": "Max Ent",
    "avg_ent": "Average Ent",
}
_DISPLAY_POINT = {"max_ent": "Max", "min_ent": "Min", "max_diff": "MaxDiff"}


@dataclass(frozen=True, order=True)
class MethodId:
    family: str
    variant: str
    point: str | None = None
    distance_id: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        allowed = SINGLE_VARIANTS if self.family == "single" else MULTI_VARIANTS
        if self.variant not in allowed:
            raise ValueError(f"variant {self.variant!r} not valid for family {self.family!r}")
        if (self.point is not None) != (self.family == "perturb"):
            raise ValueError("point is required for, and only for, the perturb family")
        if self.point is not None and self.point not in POINTS:
            raise ValueError(f"unknown interest point {self.point!r}")
        if (self.distance_id is not None) != (self.family != "single"):
            raise ValueError("distance_id is required for, and only for, multi-inference families")

    @property
    def name(self) -> str:
        """Short CLI name, e.g. ``avg_ent``, ``sample_vro``, ``maxdiff_vr``."""
        if self.family == "single":
            return self.variant
        if self.family == "sample":
            return f"sample_{self.variant}"
        return f"{_POINT_PREFIX[self.point]}_{self.variant}"

    @property
    def display(self) -> str:
        if self.family == "single":
            return _DISPLAY_SINGLE[self.variant]
        head = "Sample" if self.family == "sample" else _DISPLAY_POINT[self.point]
        return f"{head} {self.variant.upper()}"

    def with_distance(self, distance_id: str | None) -> "MethodId":
        if self.family == "single":
            return self
        return MethodId(self.family, self.variant, self.point, distance_id)

    @classmethod
    def parse(cls, name: str, distance_id: str | None = None) -> "MethodId":
        name = name.strip().lower()
        if name in SINGLE_VARIANTS:
            return cls("single", name)
        head, _, variant = name.rpartition("_")
        if variant not in MULTI_VARIANTS:
            raise ValueError(f"unknown method {name!r}")
        if head == "sample":
            return cls("sample", variant, None, distance_id or "token_f1")
        if head in _PREFIX_POINT:
            return cls("perturb", variant, _PREFIX_POINT[head], distance_id or "token_f1")
        raise ValueError(f"unknown method {name!r}")


METHOD_NAMES = (
    "max_prob", "avg_prob", "max_ent", "avg_ent",
    "sample_vr", "sample_vro",
    "max_vr", "max_vro", "min_vr", "min_vro", "maxdiff_vr", "maxdiff_vro",
)


def all_methods(distance_id: str = "token_f1") -> list[MethodId]:
    return [MethodId.parse(n, distance_id) for n in METHOD_NAMES]


@dataclass(frozen=True)
class UncertaintyScore:
    method: MethodId
    value: float
    inferences: tuple[Generation, ...] = ()
    meta: dict[str, Any] = field(default_factory=dict)
