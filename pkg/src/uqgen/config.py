"""Run configuration. Defaults: T=5, t=0.7, top-5 token access."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .core import METHOD_NAMES, MethodId
from .distance import DISTANCE_IDS, make_provider
from .errors import ConfigError
from .generators import CachedGenerator, Generator, MockModel, OpenAICompletionsGenerator, coin_model, two_class_model
from .scoring import Estimator
from .token_scores import ENTROPY_MODES

# Illustrative prompt templates, not tuned for any particular model.
TEMPLATES = {
    "plain": "{input}",
    "qa": "Q: {input}\nA:",
    "summarization": "{input}\nTL;DR:",
    "translation": "Translate French to English.\n{example}\nFrench: {input}\nEnglish:",
    "codegen": "{input}\n",
}

REPORT_FORMATS = ("json", "csv", "text")


@dataclass
class RunConfig:
    backend: str = "mock:two-class"
    model: str | None = None
    base_url: str = "https://api.openai.com/v1"
    request_timeout: float = 60.0
    max_retries: int = 3
    methods: list[str] = field(default_factory=lambda: list(METHOD_NAMES))
    T: int = 5
    temperature: float = 0.7
    topk: int = 5
    max_tokens: int = 64
    distance: dict[str, str] = field(default_factory=lambda: {"sample": "auto", "perturb": "auto"})
    embed_provider: str = "hashed"
    seed: int = 0
    parallelism: int = 4
    cache: str | None = None
    entropy_mode: str = "raw"
    perturb_include_original: bool = True
    bleu_smoothing: bool = True
    lang: str = "toy"
    prompt_template: str = "{input}"
    judge_command: str | None = None
    judge_timeout: float = 10.0
    sample: int | None = None
    formats: list[str] = field(default_factory=lambda: ["json", "csv"])

    def validate(self) -> "RunConfig":
        if self.T < 2:
            raise ConfigError(f"T must be >= 2, got {self.T}")
        if self.temperature <= 0:
            raise ConfigError(f"sampling temperature must be > 0, got {self.temperature}")
        if self.topk < 1:
            raise ConfigError("topk must be >= 1")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.entropy_mode not in ENTROPY_MODES:
            raise ConfigError(f"entropy mode must be one of {ENTROPY_MODES}, got {self.entropy_mode!r}")
        for fam, did in self.distance.items():
            if fam not in ("sample", "perturb"):
                raise ConfigError(f"distance family must be sample or perturb, got {fam!r}")
            if did != "auto" and did not in DISTANCE_IDS:
                raise ConfigError(f"unknown distance {did!r}")
        for fmt in self.formats:
            if fmt not in REPORT_FORMATS:
                raise ConfigError(f"unknown report format {fmt!r}")
        self.method_ids()
        return self

    def method_ids(self) -> list[MethodId]:
        out = []
        for name in self.methods:
            try:
                probe = MethodId.parse(name)
            except ValueError:
                raise ConfigError(f"unknown method {name!r}") from None
            out.append(probe.with_distance(self.distance.get(probe.family, "auto")))
        if not out:
            raise ConfigError("no methods requested")
        return out

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**d).validate()

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        """Load a config file, or the config embedded in a run summary."""
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if isinstance(d, dict) and isinstance(d.get("config"), dict):
            d = d["config"]
        if not isinstance(d, dict):
            raise ConfigError(f"config {path} is not a JSON object")
        return cls.from_dict(d)


def build_generator(cfg: RunConfig) -> Generator:
    kind, _, arg = cfg.backend.partition(":")
    if kind == "mock":
        if arg in ("", "two-class"):
            gen: Generator = two_class_model()
        elif arg == "coin":
            gen = coin_model()
        else:
            try:
                gen = MockModel.from_file(arg)
            except OSError as exc:
                raise ConfigError(f"cannot read mock model {arg}: {exc}") from None
    elif kind == "openai":
        model = cfg.model or arg
        if not model:
            raise ConfigError("openai backend needs --model")
        gen = OpenAICompletionsGenerator(
            model, base_url=cfg.base_url, timeout=cfg.request_timeout, max_retries=cfg.max_retries
        )
    else:
        raise ConfigError(f"unknown backend {cfg.backend!r}; expected mock[:two-class|coin|<file>] or openai")
    if cfg.cache:
        gen = CachedGenerator(gen, cfg.cache)
    return gen


def build_estimator(cfg: RunConfig, generator: Generator | None = None, parallelism: int | None = None) -> Estimator:
    return Estimator(
        generator=generator or build_generator(cfg),
        T=cfg.T,
        temperature=cfg.temperature,
        topk=cfg.topk,
        max_tokens=cfg.max_tokens,
        seed=cfg.seed,
        entropy_mode=cfg.entropy_mode,
        include_original=cfg.perturb_include_original,
        parallelism=cfg.parallelism if parallelism is None else parallelism,
        bleu_smoothing=cfg.bleu_smoothing,
        lang=cfg.lang,
        provider=make_provider(cfg.embed_provider),
    )
