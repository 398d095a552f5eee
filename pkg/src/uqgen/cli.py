"""Command-line entry point: ``uqgen score | evaluate | report``.

Exit codes: 0 success, 2 configuration error, 3 backend error, 4 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .config import REPORT_FORMATS, RunConfig, build_estimator, build_generator
from .core import METHOD_NAMES, TASKS, MethodId, Prompt
from .distance import make_provider
from .errors import BackendError, ConfigError, DataError, InferenceError, JudgeError, ProviderError
from .eval import (
    EvalRecord,
    JudgeConfig,
    dataset_hash,
    evaluate,
    load_dataset,
    load_precomputed,
    load_records,
    sample_instances,
    summarize,
)

EXIT_OK, EXIT_CONFIG, EXIT_BACKEND, EXIT_DATA = 0, 2, 3, 4
CSV_COLUMNS = ("method", "family", "variant", "point", "distance", "metric_name", "value", "n", "skipped")
TOP_MARK = 3

log = logging.getLogger("uqgen")


def _parse_methods(spec: str) -> list[str]:
    if spec.strip().lower() == "all":
        return list(METHOD_NAMES)
    names = [s.strip().lower() for s in spec.split(",") if s.strip()]
    for name in names:
        try:
            MethodId.parse(name)
        except ValueError:
            raise ConfigError(f"unknown method {name!r}") from None
    return names


def _parse_distance(spec: str) -> dict[str, str]:
    """``bleu`` sets both families; ``sample=bleu,perturb=rouge_l`` sets each."""
    if "=" not in spec:
        return {"sample": spec, "perturb": spec}
    out = {}
    for part in spec.split(","):
        fam, _, did = part.partition("=")
        out[fam.strip()] = did.strip()
    return out


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="RunConfig JSON, or a summary.json whose embedded config is reused")
    p.add_argument("--backend", help="mock[:two-class|coin|<model.json>] or openai")
    p.add_argument("--model")
    p.add_argument("--base-url")
    p.add_argument("--methods", help="comma-separated method names, or 'all'")
    p.add_argument("--distance", help="distance id for both families, or sample=ID,perturb=ID")
    p.add_argument("--embed-provider", help="hashed[:dim] or remote[:model]")
    p.add_argument("--T", type=int, dest="T")
    p.add_argument("--temperature", type=float)
    p.add_argument("--topk", type=int)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--cache", help="directory for the generation cache")
    p.add_argument("--entropy-mode", choices=("raw", "renormalized"))
    p.add_argument("--perturb-include-original", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--bleu-smoothing", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--lang", help="syntax provider for codebleu (toy, python)")
    p.add_argument("--template", help="prompt template with {input} and {field} placeholders")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides: dict[str, Any] = {
        "backend": args.backend,
        "model": args.model,
        "base_url": args.base_url,
        "embed_provider": args.embed_provider,
        "T": args.T,
        "temperature": args.temperature,
        "topk": args.topk,
        "max_tokens": args.max_tokens,
        "seed": args.seed,
        "parallelism": args.parallelism,
        "cache": args.cache,
        "entropy_mode": args.entropy_mode,
        "perturb_include_original": args.perturb_include_original,
        "bleu_smoothing": args.bleu_smoothing,
        "lang": args.lang,
        "prompt_template": args.template,
    }
    if args.methods is not None:
        overrides["methods"] = _parse_methods(args.methods)
    if args.distance is not None:
        overrides["distance"] = {**cfg.distance, **_parse_distance(args.distance)}
    for key in ("sample", "judge_command", "judge_timeout"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    if getattr(args, "format", None) is not None and args.command == "evaluate":
        overrides["formats"] = [f.strip() for f in args.format.split(",")]
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg.validate()


# ---------------------------------------------------------------- score


def cmd_score(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    cfg = _config_from_args(args)
    fmt = args.format or "text"
    if fmt not in REPORT_FORMATS:
        raise ConfigError(f"unknown format {fmt!r}")
    estimator = build_estimator(cfg)
    text = cfg.prompt_template.replace("{input}", args.prompt)
    prompt = Prompt(args.prompt_id, text, args.task)
    run = estimator.score(prompt, cfg.method_ids())
    rows = [
        {
            "method": s.method.name,
            "score": s.value,
            "inferences": len(s.inferences) if s.inferences else 1,
            "wall_time_s": run.timing.get(s.method.name, 0.0),
        }
        for s in run.scores
    ]
    if fmt == "json":
        json.dump({"output": run.original.text, "scores": rows, "errors": run.errors}, out, indent=2)
        out.write("\n")
    elif fmt == "csv":
        w = csv.DictWriter(out, fieldnames=["method", "score", "inferences", "wall_time_s"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    else:
        out.write(f"{'method':<14}{'score':>10}{'inferences':>12}{'wall_ms':>10}\n")
        for r in rows:
            out.write(f"{r['method']:<14}{r['score']:>10.4f}{r['inferences']:>12d}{r['wall_time_s'] * 1000:>10.1f}\n")
    out.flush()
    for name, msg in run.errors.items():
        print(f"uqgen: {name}: {msg}", file=sys.stderr)
    return EXIT_BACKEND if run.errors else EXIT_OK


# ---------------------------------------------------------------- evaluate


def _summary_rows(summary: dict[str, Any]) -> list[dict[str, Any]]:
    rows = []
    for m in summary["methods"]:
        for metric, value in m["metrics"].items():
            rows.append(
                {
                    "method": m["method"],
                    "family": m["family"],
                    "variant": m["variant"],
                    "point": m["point"] or "",
                    "distance": m["distance"] or "",
                    "metric_name": metric,
                    "value": "" if value is None else repr(value),
                    "n": m["n"],
                    "skipped": m["skipped"],
                }
            )
    return rows


def _csv_text(rows: Sequence[dict[str, Any]], columns: Sequence[str] = CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def run_evaluation(cfg: RunConfig, dataset_path: str | Path, judge_results: str | None = None) -> tuple[list[EvalRecord], dict]:
    instances = load_dataset(dataset_path)
    instances = sample_instances(instances, cfg.sample, cfg.seed)
    methods = cfg.method_ids()
    precomputed = load_precomputed(judge_results) if judge_results else None
    # the instance pool owns the parallelism bound; inference inside each instance is sequential
    estimator = build_estimator(cfg, build_generator(cfg), parallelism=1)
    records = evaluate(
        instances,
        estimator,
        methods,
        provider=make_provider(cfg.embed_provider),
        judge=JudgeConfig.from_string(cfg.judge_command, cfg.judge_timeout, cfg.lang),
        precomputed=precomputed,
        parallelism=cfg.parallelism,
        template=cfg.prompt_template,
    )
    summary = {
        "toolkit_version": __version__,
        "dataset_sha256": dataset_hash(dataset_path),
        "config": cfg.to_dict(),
        **summarize(records, methods),
    }
    return records, summary


def cmd_evaluate(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    cfg = _config_from_args(args)
    records, summary = run_evaluation(cfg, args.dataset, args.judge_results)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "records.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
    if "json" in cfg.formats:
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if "csv" in cfg.formats:
        (out_dir / "summary.csv").write_text(_csv_text(_summary_rows(summary)), encoding="utf-8")
    if "text" in cfg.formats:
        (out_dir / "summary.txt").write_text(render_table(summary), encoding="utf-8")
    out.write(
        f"evaluated {summary['n_evaluated']}/{summary['n_instances']} instances "
        f"({summary['skipped']} skipped); wrote {out_dir}\n"
    )
    return EXIT_OK


# ---------------------------------------------------------------- report


def _rank_key(metric: str, value: float) -> float:
    return value if metric == "auc" else abs(value)


def ranked(summary: dict[str, Any]) -> list[dict[str, Any]]:
    """Method rows ordered by the primary metric, with the top entries of each metric marked."""
    rows = [dict(m) for m in summary["methods"]]
    metrics = sorted({k for m in rows for k in m["metrics"]}, key=("pearson", "spearman", "auc").index)
    for metric in metrics:
        defined = [m for m in rows if m["metrics"].get(metric) is not None]
        defined.sort(key=lambda m: (-_rank_key(metric, m["metrics"][metric]), m["method"]))
        top = {m["method"] for m in defined[:TOP_MARK]}
        for m in rows:
            m.setdefault("top", {})[metric] = m["method"] in top
    if metrics:
        primary = metrics[0]
        rows.sort(
            key=lambda m: (
                m["metrics"].get(primary) is None,
                -_rank_key(primary, m["metrics"][primary]) if m["metrics"].get(primary) is not None else 0.0,
                m["method"],
            )
        )
    return rows


def render_table(summary: dict[str, Any]) -> str:
    rows = ranked(summary)
    metrics = [k for k in ("pearson", "spearman", "auc") if any(k in m["metrics"] for m in rows)]
    lines = [f"{'method':<14}{'distance':<12}" + "".join(f"{k:>11}" for k in metrics) + f"{'n':>6}{'skipped':>9}"]
    for m in rows:
        cells = []
        for k in metrics:
            v = m["metrics"].get(k)
            cell = "N/A" if v is None else f"{v:+.4f}" if k != "auc" else f"{v:.4f}"
            cells.append(f"{cell + ('*' if m['top'].get(k) else ' '):>11}")
        lines.append(f"{m['method']:<14}{(m['distance'] or '-'):<12}" + "".join(cells) + f"{m['n']:>6}{m['skipped']:>9}")
    lines.append("* top-3 per column; correlations ranked by |r|")
    return "\n".join(lines) + "\n"


def merge_records(paths: Sequence[str]) -> list[EvalRecord]:
    merged: dict[str, EvalRecord] = {}
    for path in paths:
        for rec in load_records(path):
            if rec.prompt_id in merged:
                raise DataError(f"duplicate record id {rec.prompt_id!r} in {path}")
            merged[rec.prompt_id] = rec
    if not merged:
        raise DataError("no records to report")
    return list(merged.values())


def cmd_report(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    records = merge_records(args.records)
    names = {name for r in records for name in r.scores} | {name for r in records for name in r.method_errors}
    order = {n: i for i, n in enumerate(METHOD_NAMES)}
    methods = []
    for name in sorted(names, key=lambda n: (order.get(n, len(order)), n)):
        try:
            methods.append(MethodId.parse(name))
        except ValueError:
            raise DataError(f"records contain unknown method {name!r}") from None
    summary = summarize(records, methods)
    fmt = args.format or "text"
    if fmt == "json":
        out.write(json.dumps({**summary, "methods": ranked(summary)}, indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        out.write(_csv_text(_summary_rows({"methods": ranked(summary)})))
    elif fmt == "text":
        out.write(render_table(summary))
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    return EXIT_OK


# ---------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uqgen", description="Uncertainty scores for generated text and code.")
    parser.add_argument("--version", action="version", version=f"uqgen {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score one prompt with the requested methods")
    p.add_argument("prompt")
    p.add_argument("--prompt-id", default="prompt", help="prompt id (mock backends route on it)")
    p.add_argument("--task", choices=TASKS, default="qa")
    p.add_argument("--format", choices=REPORT_FORMATS)
    _add_run_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="evaluate methods over a JSONL dataset")
    p.add_argument("dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--sample", type=int, help="evaluate a seeded random subset of N instances")
    p.add_argument("--judge", dest="judge_command", help="judge command, or builtin:toy")
    p.add_argument("--judge-timeout", type=float)
    p.add_argument("--judge-results", help="precomputed judge JSONL; no judge process is spawned")
    p.add_argument("--format", help="summary formats, comma-separated (json,csv,text)")
    _add_run_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render ranked tables from evaluation records")
    p.add_argument("--records", action="append", required=True, help="records.jsonl (repeatable)")
    p.add_argument("--format", choices=REPORT_FORMATS)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"uqgen: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BackendError, ProviderError, InferenceError) as exc:
        print(f"uqgen: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DataError, JudgeError) as exc:
        print(f"uqgen: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
