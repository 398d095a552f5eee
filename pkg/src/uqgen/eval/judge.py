"""Code judge: an external process that parses and test-runs generated code.

Protocol -- stdin: ``{"code", "language", "tests": [{"input", "expected"}]}``;
stdout: ``{"syntax_ok", "tests_total", "tests_passed"}``; nonzero exit means
the judge crashed.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from ..distance.syntax import parses, run_toy, get_syntax_provider
from ..errors import DataError, JudgeError, ParseFailure
from .metrics import JudgeResult

BUILTIN_TOY_COMMAND = (sys.executable, "-m", "uqgen.eval.toyjudge")


@dataclass
class JudgeConfig:
    command: Sequence[str] = field(default_factory=lambda: list(BUILTIN_TOY_COMMAND))
    timeout: float = 10.0
    language: str = "toy"

    @classmethod
    def from_string(cls, command: str | None, timeout: float = 10.0, language: str = "toy") -> "JudgeConfig":
        if not command or command == "builtin:toy":
            return cls(list(BUILTIN_TOY_COMMAND), timeout, language)
        return cls(shlex.split(command), timeout, language)


def _values_equal(got: Any, expected: Any) -> bool:
    if isinstance(got, (int, float)) and isinstance(expected, (int, float)) and not isinstance(got, bool):
        return math.isclose(got, expected, rel_tol=1e-9, abs_tol=1e-9)
    return got == expected


def toy_judge(code: str, tests: Sequence[dict[str, Any]]) -> JudgeResult:
    """In-process judge for the toy language.

    A test's ``input`` is either a mapping of variable bindings or a scalar bound to ``x``.
    """
    try:
        tree = get_syntax_provider("toy").parse(code)
    except ParseFailure:
        return JudgeResult(False, len(tests), 0)
    passed = 0
    for test in tests:
        inp = test.get("input")
        env = dict(inp) if isinstance(inp, dict) else {"x": inp}
        try:
            got = run_toy(tree, env)
        except Exception:
            continue
        if _values_equal(got, test.get("expected")):
            passed += 1
    return JudgeResult(True, len(tests), passed)


def run_judge(code: str, tests: Sequence[dict[str, Any]], judge: JudgeConfig) -> JudgeResult:
    """Run the judge once with a wall-clock timeout.

    On timeout, tests count as failed and syntax comes from a parse-only pass.
    """
    payload = json.dumps({"code": code, "language": judge.language, "tests": list(tests)})
    try:
        proc = subprocess.run(
            list(judge.command),
            input=payload,
            capture_output=True,
            text=True,
            timeout=judge.timeout,
        )
    except subprocess.TimeoutExpired:
        return JudgeResult(parses(judge.language, code), len(tests), 0, ("timeout",))
    except OSError as exc:
        raise JudgeError(f"judge could not start: {exc}") from None
    if proc.returncode != 0:
        raise JudgeError(f"judge exited with status {proc.returncode}: {proc.stderr.strip()[:300]}")
    try:
        out = json.loads(proc.stdout)
        return JudgeResult(bool(out["syntax_ok"]), int(out["tests_total"]), int(out["tests_passed"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise JudgeError(f"judge produced malformed output: {exc}") from None


def load_precomputed(path: str | Path) -> dict[str, JudgeResult]:
    """Read a JSONL of ``{prompt_id, syntax_ok, tests_total, tests_passed}``."""
    results: dict[str, JudgeResult] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                results[str(row["prompt_id"])] = JudgeResult(
                    bool(row["syntax_ok"]), int(row["tests_total"]), int(row["tests_passed"])
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}: bad judge record ({exc})", line=lineno) from None
    return results
