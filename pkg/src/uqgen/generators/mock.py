"""Deterministic table-driven language model.

The model is a Markov chain over tokens: the last ``context_len`` emitted
tokens (seeded by a per-prompt initial context) select a row giving the next
token distribution. Every probability is known exactly, which is what lets
tests compute oracle values by hand.

Definition file (JSON)::

    {"vocab": [...], "context_len": 1, "stop_token": "<eos>", "max_len": 32,
     "joiner": " ",
     "rows": [{"context": ["a"], "dist": {"b": 0.7, "c": 0.3}}, ...],
     "prompt_classes": {"confident-*": ["a"], "*": ["z"]}}

``prompt_classes`` maps prompt-id glob patterns to initial contexts; the first
matching pattern wins, in file order.
"""

from __future__ import annotations

import fnmatch
import json
import math
import random
from pathlib import Path
from typing import Any, Sequence

from ..core import Generation, Prompt, make_step
from ..errors import ConfigError
from .base import CAP_FORCED, CAP_LOGPROBS, CAP_SEEDED, CAP_TOPK, Generator, pick_token

ROW_TOLERANCE = 1e-9


class MockModel(Generator):
    capabilities = frozenset({CAP_LOGPROBS, CAP_TOPK, CAP_FORCED, CAP_SEEDED})

    def __init__(
        self,
        rows: dict[tuple[str, ...], dict[str, float]],
        prompt_classes: dict[str, Sequence[str]],
        vocab: Sequence[str] | None = None,
        context_len: int = 1,
        stop_token: str = "<eos>",
        max_len: int = 32,
        joiner: str = "",
        id: str = "mock",
        max_topk: int = 20,
    ):
        if context_len < 1:
            raise ConfigError("context_len must be >= 1")
        self.rows = {tuple(k): dict(v) for k, v in rows.items()}
        for ctx, dist in self.rows.items():
            total = math.fsum(dist.values())
            if abs(total - 1.0) > ROW_TOLERANCE or any(p < 0 for p in dist.values()):
                raise ConfigError(f"mock row {list(ctx)} does not sum to 1 (sum={total!r})")
        self.prompt_classes = {k: tuple(v) for k, v in prompt_classes.items()}
        tokens = set(vocab or ())
        for dist in self.rows.values():
            tokens.update(dist)
        tokens.discard(stop_token)
        self.vocab = sorted(tokens)
        self.context_len = context_len
        self.stop_token = stop_token
        self.max_len = max_len
        self.joiner = joiner
        self.id = id
        self.max_topk = max_topk

    # -- construction / serialization ------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MockModel":
        try:
            rows = {tuple(r["context"]): r["dist"] for r in d["rows"]}
            return cls(
                rows=rows,
                prompt_classes=d.get("prompt_classes", {}),
                vocab=d.get("vocab"),
                context_len=int(d.get("context_len", 1)),
                stop_token=d.get("stop_token", "<eos>"),
                max_len=int(d.get("max_len", 32)),
                joiner=d.get("joiner", ""),
                id=d.get("id", "mock"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed mock model definition: {exc}") from None

    @classmethod
    def from_file(cls, path: str | Path) -> "MockModel":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        d.setdefault("id", f"mock:{Path(path).stem}")
        return cls.from_dict(d)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "vocab": self.vocab,
            "context_len": self.context_len,
            "stop_token": self.stop_token,
            "max_len": self.max_len,
            "joiner": self.joiner,
            "rows": [{"context": list(k), "dist": v} for k, v in self.rows.items()],
            "prompt_classes": {k: list(v) for k, v in self.prompt_classes.items()},
        }

    # -- decoding -----------------------------------------------------------------------

    def initial_context(self, prompt: Prompt) -> tuple[str, ...]:
        for pattern, ctx in self.prompt_classes.items():
            if fnmatch.fnmatchcase(prompt.id, pattern):
                return ctx
        raise ConfigError(f"{self.id}: no prompt class matches prompt id {prompt.id!r}")

    def prompt_key(self, prompt: Prompt) -> str:
        # decoding depends on the prompt id through prompt_classes
        return f"{prompt.id}\x00{prompt.text}"

    def row(self, context: Sequence[str]) -> tuple[list[tuple[str, float]], bool]:
        """Next-token distribution for a context; falls back to uniform over vocab+stop."""
        key = tuple(context[-self.context_len :])
        dist = self.rows.get(key)
        if dist is None:
            options = self.vocab + [self.stop_token]
            return [(t, 1.0 / len(options)) for t in options], True
        return list(dist.items()), False

    def _topk(self, dist: list[tuple[str, float]], k: int) -> list[tuple[str, float]]:
        ranked = sorted(((t, p) for t, p in dist if p > 0), key=lambda e: (-e[1], e[0]))
        return [(t, math.log(p)) for t, p in ranked[:k]]

    def _decode(self, prompt, forced, temperature, seed, max_tokens, topk) -> Generation:
        if temperature < 0:
            raise ValueError("temperature must be >= 0")
        self.check_topk(topk)
        rng = random.Random(seed)
        context = list(self.initial_context(prompt))
        limit = min(max_tokens, self.max_len)
        steps = []
        injected = []
        fallback = False
        finish = "length"
        pos = 0
        while pos < max(limit, len(forced)):
            dist, fell_back = self.row(context)
            fallback = fallback or fell_back
            if pos < len(forced):
                token = forced[pos]
            else:
                token = pick_token(dist, temperature, rng)
                if token == self.stop_token:
                    finish = "stop"
                    break
            p = dict(dist).get(token, 0.0)
            step, was_injected = make_step(token, math.log(p) if p > 0 else None, self._topk(dist, topk), pos)
            if was_injected:
                injected.append(pos)
            steps.append(step)
            context.append(token)
            pos += 1
        meta: dict[str, Any] = {}
        if fallback:
            meta["fallback"] = True
        if injected:
            meta["injected"] = injected
        if forced:
            meta["forced_prefix_len"] = len(forced)
        return Generation(
            prompt_id=prompt.id,
            text=self.joiner.join(s.token for s in steps),
            steps=tuple(steps),
            temperature=float(temperature),
            seed=seed,
            backend_id=self.id,
            finish_reason=finish,
            meta=meta,
        )

    def generate(self, prompt, temperature=0.0, seed=None, max_tokens=64, topk=5) -> Generation:
        return self._decode(prompt, (), temperature, seed, max_tokens, topk)

    def generate_forced(self, prompt, forced_prefix, temperature=0.0, seed=None, max_tokens=64, topk=5) -> Generation:
        return self._decode(prompt, tuple(forced_prefix), temperature, seed, max_tokens, topk)


# -- ready-made models ----------------------------------------------------------------


def coin_model() -> MockModel:
    """Two prompt classes: ``uncertain*`` picks heads/tails 50/50, ``confident*`` always says ``sure``."""
    return MockModel(
        rows={
            ("<u>",): {"heads": 0.5, "tails": 0.5},
            ("<c>",): {"sure": 1.0},
            ("heads",): {"<eos>": 1.0},
            ("tails",): {"<eos>": 1.0},
            ("sure",): {"<eos>": 1.0},
        },
        prompt_classes={"uncertain*": ["<u>"], "confident*": ["<c>"]},
        joiner=" ",
        id="mock:coin",
    )


RARE = 0.005


def two_class_model(n_per_class: int = 50, length: int = 10, pool_size: int = 40, seed: int = 0) -> MockModel:
    """Mock with ``confident-NN`` and ``fuzzy-NN`` prompt classes.

    Confident prompts follow a private chain of ``length`` tokens. Each link is
    near one-hot (0.98, with four rare variants at 0.005) except one "synonym"
    link where the main word takes ``q ~ U(0.45, 0.95)`` and its first variant
    most of the rest. Every variant leads to the same next link, so sampling
    changes single words but never the continuation.

    Fuzzy prompts enter a shared pool of words whose rows put ``U(0.5, 0.85)``
    on the most likely successor and spread the rest over four others, so a
    single sampled deviation sends the rest of the text elsewhere.

    Every row offers at least four alternatives, enough for perturbation at T=5.

    The synonym link makes Max Prob overlap between classes while VRO does not.
    """
    rng = random.Random(seed)
    rows: dict[tuple[str, ...], dict[str, float]] = {}
    classes: dict[str, list[str]] = {}
    pool = [f"w{i}" for i in range(pool_size)]

    for i in range(n_per_class):
        start = f"<c{i}>"
        classes[f"confident-{i:02d}"] = [start]
        chain = [f"c{i}x{j}" for j in range(length)]
        syn_at = rng.randrange(length)
        q = round(rng.uniform(0.45, 0.95), 4)
        prev = [start]
        for j, word in enumerate(chain):
            alts = [f"{word}{v}" for v in "bcde"]
            p_main = q if j == syn_at else 0.98
            dist = {word: p_main, alts[0]: round(1.0 - p_main - 3 * RARE, 10)}
            dist.update({a: RARE for a in alts[1:]})
            for ctx in prev:
                rows[(ctx,)] = dist
            prev = [word, *alts]
        for ctx in prev:
            rows[(ctx,)] = {"<eos>": 1.0}

    for word in pool:
        successors = rng.sample([w for w in pool if w != word], 5)
        main = round(rng.uniform(0.5, 0.85), 4)
        rest = [rng.random() + 0.1 for _ in range(4)]
        scale = (1.0 - main) / sum(rest)
        probs = [main] + [round(r * scale, 6) for r in rest]
        probs[-1] = round(1.0 - sum(probs[:-1]), 10)
        rows[(word,)] = dict(zip(successors, probs))

    for i in range(n_per_class):
        start = f"<f{i}>"
        classes[f"fuzzy-{i:02d}"] = [start]
        successors = rng.sample(pool, 5)
        main = round(rng.uniform(0.5, 0.85), 4)
        rest = [rng.random() + 0.1 for _ in range(4)]
        scale = (1.0 - main) / sum(rest)
        probs = [main] + [round(r * scale, 6) for r in rest]
        probs[-1] = round(1.0 - sum(probs[:-1]), 10)
        rows[(start,)] = dict(zip(successors, probs))

    return MockModel(
        rows=rows,
        prompt_classes=classes,
        context_len=1,
        max_len=length,
        joiner=" ",
        id="mock:two-class",
    )


def two_class_dataset(model: MockModel, seed: int = 1) -> list[dict[str, Any]]:
    """Dataset rows for :func:`two_class_model`.

    Confident references equal the greedy output; fuzzy references are an
    unrelated walk through the word pool.
    """
    rng = random.Random(seed)
    rows = []
    pool = sorted({t for ctx, d in model.rows.items() for t in d if t.startswith("w")})
    for pid in sorted(model.prompt_classes):
        prompt = Prompt(pid, f"Question {pid}?", "qa")
        if pid.startswith("confident"):
            ref = model.generate(prompt).text
        else:
            ref = " ".join(rng.choice(pool) for _ in range(model.max_len))
        rows.append({"id": pid, "input": f"Question {pid}?", "references": [ref], "task": "qa"})
    return rows
