"""Dataset ingestion and the evaluation loop pairing uncertainty scores with performance."""

from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from ..core import TASKS, MethodId, Prompt
from ..distance.embedding import EmbeddingProvider, default_provider
from ..errors import BackendError, DataError, UQGenError
from ..scoring import Estimator
from .judge import JudgeConfig, run_judge
from .metrics import JudgeResult, UndefinedMetric, auc, label_code, pearson, q_score, semantic_performance, spearman

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetInstance:
    id: str
    input: str
    task: str = "qa"
    references: tuple[str, ...] = ()
    template: str | None = None
    fields: dict[str, str] = field(default_factory=dict)
    tests: tuple[dict[str, Any], ...] | None = None
    language: str | None = None

    def prompt_text(self, default_template: str = "{input}") -> str:
        text = self.template or default_template
        for name, value in self.fields.items():
            text = text.replace("{" + name + "}", str(value))
        return text.replace("{input}", self.input)

    def prompt(self, default_template: str = "{input}") -> Prompt:
        return Prompt(self.id, self.prompt_text(default_template), self.task)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DatasetInstance":
        if not isinstance(d, dict):
            raise ValueError("instance must be a JSON object")
        for key in ("id", "input"):
            if key not in d:
                raise ValueError(f"missing field {key!r}")
        task = d.get("task", "qa")
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        refs = d.get("references", [])
        if isinstance(refs, str) or not all(isinstance(r, str) for r in refs):
            raise ValueError("references must be a list of strings")
        if task != "codegen" and not refs:
            raise ValueError("non-code instances need at least one reference")
        tests = d.get("tests")
        if tests is not None and not isinstance(tests, list):
            raise ValueError("tests must be a list")
        return cls(
            id=str(d["id"]),
            input=str(d["input"]),
            task=task,
            references=tuple(refs),
            template=d.get("template"),
            fields={str(k): str(v) for k, v in (d.get("fields") or {}).items()},
            tests=tuple(tests) if tests is not None else None,
            language=d.get("language"),
        )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id, "input": self.input, "task": self.task, "references": list(self.references)}
        if self.template is not None:
            d["template"] = self.template
        if self.fields:
            d["fields"] = dict(self.fields)
        if self.tests is not None:
            d["tests"] = list(self.tests)
        if self.language is not None:
            d["language"] = self.language
        return d


def load_dataset(path: str | Path) -> list[DatasetInstance]:
    """Read a JSONL dataset. Malformed lines raise DataError carrying the line number."""
    out: list[DatasetInstance] = []
    seen: set[str] = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                inst = DatasetInstance.from_dict(json.loads(line))
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}", line=lineno) from None
            if inst.id in seen:
                raise DataError(f"{path}: line {lineno}: duplicate id {inst.id!r}", line=lineno)
            seen.add(inst.id)
            out.append(inst)
    if not out:
        raise DataError(f"{path}: dataset is empty")
    return out


def dataset_hash(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sample_instances(instances: Sequence[DatasetInstance], n: int | None, seed: int) -> list[DatasetInstance]:
    """Seeded uniform draw without replacement; file order is kept."""
    if n is None or n >= len(instances):
        return list(instances)
    if n < 1:
        raise ValueError("sample size must be >= 1")
    keep = set(random.Random(seed).sample(range(len(instances)), n))
    return [inst for i, inst in enumerate(instances) if i in keep]


@dataclass
class EvalRecord:
    prompt_id: str
    task: str
    performance: float | None
    label: int | None
    scores: dict[str, float]
    timing: dict[str, float] = field(default_factory=dict)
    output: str = ""
    distances: dict[str, str] = field(default_factory=dict)
    method_errors: dict[str, str] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt_id": self.prompt_id,
            "task": self.task,
            "performance": self.performance,
            "label": self.label,
            "scores": self.scores,
            "timing": self.timing,
            "output": self.output,
            "distances": self.distances,
            "method_errors": self.method_errors,
            "flags": self.flags,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvalRecord":
        return cls(
            prompt_id=str(d["prompt_id"]),
            task=d.get("task", "qa"),
            performance=d.get("performance"),
            label=d.get("label"),
            scores={k: float(v) for k, v in d.get("scores", {}).items()},
            timing=d.get("timing", {}),
            output=d.get("output", ""),
            distances=d.get("distances", {}),
            method_errors=d.get("method_errors", {}),
            flags=list(d.get("flags", [])),
            error=d.get("error"),
        )


def load_records(path: str | Path) -> list[EvalRecord]:
    out = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read records {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(EvalRecord.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                raise DataError(f"{path}: line {lineno}: bad record ({exc})", line=lineno) from None
    return out


class _Evaluator:
    def __init__(self, estimator, methods, provider, judge, precomputed, template, judge_parallelism):
        self.estimator = estimator
        self.methods = methods
        self.provider = provider
        self.judge = judge
        self.precomputed = precomputed
        self.template = template
        self._judge_slots = threading.BoundedSemaphore(judge_parallelism)

    def judge_code(self, inst: DatasetInstance, code: str) -> JudgeResult:
        if self.precomputed is not None and inst.id in self.precomputed:
            return self.precomputed[inst.id]
        cfg = self.judge
        if inst.language and inst.language != cfg.language:
            cfg = JudgeConfig(cfg.command, cfg.timeout, inst.language)
        with self._judge_slots:
            return run_judge(code, list(inst.tests or ()), cfg)

    def __call__(self, inst: DatasetInstance) -> EvalRecord:
        try:
            prompt = inst.prompt(self.template)
            run = self.estimator.score(prompt, self.methods)
            output = run.original.text
            flags: list[str] = []
            label = None
            if inst.task == "codegen":
                j = self.judge_code(inst, output)
                flags.extend(j.flags)
                if j.tests_total == 0:
                    flags.append("no_tests")
                performance = q_score(j)
                label = label_code(j)
            else:
                performance = semantic_performance(output, inst.references, self.provider)
        except (UQGenError, ValueError) as exc:
            log.warning("instance %s failed: %s", inst.id, exc)
            return EvalRecord(inst.id, inst.task, None, None, {}, error=f"{type(exc).__name__}: {exc}")
        return EvalRecord(
            prompt_id=inst.id,
            task=inst.task,
            performance=performance,
            label=label,
            scores={s.method.name: s.value for s in run.scores},
            timing=run.timing,
            output=output,
            distances={s.method.name: s.method.distance_id for s in run.scores if s.method.distance_id},
            method_errors=run.errors,
            flags=flags,
        )


def evaluate(
    instances: Sequence[DatasetInstance],
    estimator: Estimator,
    methods: Sequence[MethodId],
    *,
    provider: EmbeddingProvider | None = None,
    judge: JudgeConfig | None = None,
    precomputed: dict[str, JudgeResult] | None = None,
    parallelism: int = 1,
    judge_parallelism: int = 2,
    template: str = "{input}",
) -> list[EvalRecord]:
    """Score and judge every instance; records come back sorted by id.

    Per-instance failures become records with ``error`` set. If every instance
    failed on the backend, the first BackendError is raised instead.
    """
    if not methods:
        raise ValueError("no methods requested")
    for inst in instances:
        if inst.task == "codegen" and inst.tests is None and (precomputed is None or inst.id not in precomputed):
            raise DataError(f"codegen instance {inst.id!r} has neither tests nor a precomputed judge entry")
    worker = _Evaluator(
        estimator, list(methods), provider or default_provider(), judge or JudgeConfig(), precomputed,
        template, judge_parallelism,
    )
    ordered = sorted(instances, key=lambda i: i.id)
    if parallelism <= 1:
        records = [worker(inst) for inst in ordered]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(worker, ordered))
    if records and all(r.error and r.error.startswith(("BackendError", "CapabilityError")) for r in records):
        raise BackendError(f"every instance failed on the backend; first: {records[0].error}")
    return records


def _metric(fn, xs, ys) -> float | None:
    try:
        return fn(xs, ys)
    except UndefinedMetric:
        return None


def summarize(records: Sequence[EvalRecord], methods: Sequence[MethodId]) -> dict[str, Any]:
    """Per-method association metrics; undefined metrics are ``None`` (never 0)."""
    records = sorted(records, key=lambda r: r.prompt_id)
    ok = [r for r in records if r.ok]
    rows = []
    for m in methods:
        name = m.name
        nlp = [(r.scores[name], r.performance) for r in ok if r.task != "codegen" and name in r.scores]
        code = [(r.scores[name], r.label) for r in ok if r.task == "codegen" and name in r.scores]
        scored = len(nlp) + len(code)
        dists = sorted({r.distances[name] for r in ok if name in r.distances})
        metrics: dict[str, float | None] = {}
        if any(r.task != "codegen" for r in records):
            xs, ys = [p[0] for p in nlp], [p[1] for p in nlp]
            metrics["pearson"] = _metric(pearson, xs, ys)
            metrics["spearman"] = _metric(spearman, xs, ys)
        if any(r.task == "codegen" for r in records):
            metrics["auc"] = _metric(auc, [p[0] for p in code], [p[1] for p in code])
        rows.append(
            {
                "method": name,
                "display": m.display,
                "family": m.family,
                "variant": m.variant,
                "point": m.point,
                "distance": "+".join(dists) if dists else None,
                "metrics": metrics,
                "n": scored,
                "skipped": len(records) - scored,
                "errors": sum(1 for r in ok if name in r.method_errors),
            }
        )
    return {
        "n_instances": len(records),
        "n_evaluated": len(ok),
        "skipped": len(records) - len(ok),
        "failed_instances": [r.prompt_id for r in records if not r.ok],
        "methods": rows,
    }
