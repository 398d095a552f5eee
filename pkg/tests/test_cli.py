import csv
import io
import json

import pytest

from uqgen import __version__
from uqgen.cli import main
from uqgen.config import RunConfig, build_generator
from uqgen.core import METHOD_NAMES
from uqgen.errors import ConfigError
from uqgen.generators import CachedGenerator, two_class_dataset, two_class_model


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "tc.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in two_class_dataset(two_class_model())))
    return path


# -- config -------------------------------------------------------------------------------------


def test_default_config_values():
    cfg = RunConfig()
    assert (cfg.T, cfg.temperature, cfg.topk) == (5, 0.7, 5)
    assert cfg.methods == list(METHOD_NAMES)
    assert cfg.entropy_mode == "raw" and cfg.perturb_include_original


def test_config_round_trip(tmp_path):
    cfg = RunConfig(methods=["sample_vro", "max_prob"], distance={"sample": "bleu", "perturb": "auto"}, seed=9)
    path = tmp_path / "cfg.json"
    path.write_text(cfg.dumps())
    assert RunConfig.load(path) == cfg
    assert RunConfig.from_dict(json.loads(cfg.dumps())).dumps() == cfg.dumps()


@pytest.mark.parametrize(
    "bad",
    [dict(T=1), dict(temperature=0), dict(methods=["nope"]), dict(distance={"sample": "cosine"}),
     dict(entropy_mode="bits"), dict(formats=["xml"]), dict(methods=[])],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        RunConfig(**bad).validate()


def test_config_unknown_keys(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"T": 5, "temprature": 0.7})


def test_build_generator(tmp_path):
    assert build_generator(RunConfig(backend="mock:coin")).id == "mock:coin"
    assert isinstance(build_generator(RunConfig(cache=str(tmp_path / "c"))), CachedGenerator)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(two_class_model(n_per_class=2).to_dict()))
    assert build_generator(RunConfig(backend=f"mock:{path}")).generate
    with pytest.raises(ConfigError):
        build_generator(RunConfig(backend="llama"))
    with pytest.raises(ConfigError):
        build_generator(RunConfig(backend="openai"))
    with pytest.raises(ConfigError):
        build_generator(RunConfig(backend="mock:/no/such/file.json"))


# -- score -----------------------------------------------------------------------------------------


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_score_all_methods_reproducible(capsys):
    argv = ["score", "Question?", "--prompt-id", "fuzzy-04", "--format", "csv", "--seed", "3"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["method"] for r in rows] == list(METHOD_NAMES)
    assert {r["inferences"] for r in rows} == {"1", "5"}
    _, again, _ = run(argv, capsys)
    strip = lambda text: [(r["method"], r["score"]) for r in csv.DictReader(io.StringIO(text))]
    assert strip(out) == strip(again)


def test_score_text_and_json(capsys):
    code, out, _ = run(["score", "q", "--prompt-id", "confident-01", "--methods", "max_prob,avg_ent"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == 3
    code, out, _ = run(["score", "q", "--prompt-id", "confident-01", "--methods", "max_prob", "--format", "json"], capsys)
    assert json.loads(out)["scores"][0]["method"] == "max_prob"


def test_score_one_method_with_bleu_matches_direct_computation(capsys):
    from uqgen.core import Prompt
    from uqgen.distance import bleu
    from uqgen.divergence import sample_inferences

    code, out, _ = run(["score", "q", "--prompt-id", "fuzzy-07", "--methods", "sample_vro", "--distance", "bleu",
                        "--format", "json"], capsys)
    rows = json.loads(out)["scores"]
    assert code == 0 and len(rows) == 1 and 0 <= rows[0]["score"] <= 1
    inf = sample_inferences(two_class_model(), Prompt("fuzzy-07", "q", "qa"), 5, 0.7, 0)
    expected = 1 - sum(bleu(g.text, inf.original.text) for g in inf.variants) / 5
    assert rows[0]["score"] == pytest.approx(expected, abs=1e-12)


def test_score_exit_codes(capsys):
    code, _, err = run(["score", "q", "--methods", "max_prob,bogus_vr"], capsys)
    assert code == 2 and "bogus_vr" in err
    code, _, _ = run(["score", "q", "--prompt-id", "nothing-matches"], capsys)
    assert code == 2
    code, out, err = run(["score", "q", "--backend", "mock:coin", "--prompt-id", "confident-1"], capsys)
    assert code == 3 and "max_prob" in out and "alternatives" in err
    code, _, err = run(["score", "q", "--backend", "openai", "--model", "m", "--base-url", "http://127.0.0.1:9",
                        "--methods", "max_prob"], capsys)
    assert code == 3 and "backend error" in err


def test_score_cache_flag(tmp_path, capsys):
    argv = ["score", "q", "--prompt-id", "fuzzy-02", "--cache", str(tmp_path / "c"), "--format", "csv"]
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert (tmp_path / "c" / "generations.jsonl").exists()
    strip = lambda text: [(r["method"], r["score"]) for r in csv.DictReader(io.StringIO(text))]
    assert strip(first) == strip(second)


# -- evaluate --------------------------------------------------------------------------------------


def test_evaluate_writes_reports(dataset, tmp_path, capsys):
    out = tmp_path / "out"
    code, _, _ = run(["evaluate", str(dataset), "--out", str(out)], capsys)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["toolkit_version"] == __version__ and len(summary["dataset_sha256"]) == 64
    assert summary["config"]["T"] == 5 and summary["n_instances"] == 100
    assert len(summary["methods"]) == 12
    assert all(m["n"] == 100 and m["metrics"]["pearson"] is not None for m in summary["methods"])
    rows = list(csv.DictReader(io.StringIO((out / "summary.csv").read_text())))
    assert list(rows[0]) == ["method", "family", "variant", "point", "distance", "metric_name", "value", "n", "skipped"]
    assert sum(r["metric_name"] == "pearson" for r in rows) == 12
    assert len((out / "records.jsonl").read_text().splitlines()) == 100


def test_evaluate_rerun_from_embedded_config_is_byte_identical(dataset, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["evaluate", str(dataset), "--out", str(a), "--methods", "sample_vro,max_prob", "--sample", "20",
         "--seed", "4"], capsys)
    run(["evaluate", str(dataset), "--out", str(b), "--config", str(a / "summary.json")], capsys)
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    assert json.loads((a / "summary.json").read_text())["n_instances"] == 20


def test_evaluate_bad_dataset_line(tmp_path, capsys):
    path = tmp_path / "d.jsonl"
    path.write_text('{"id": "fuzzy-00", "input": "q", "references": ["r"]}\n{broken\n')
    code, _, err = run(["evaluate", str(path), "--out", str(tmp_path / "o")], capsys)
    assert code == 4 and "line 2" in err


def test_evaluate_bad_config(dataset, tmp_path, capsys):
    code, _, _ = run(["evaluate", str(dataset), "--out", str(tmp_path), "--T", "1"], capsys)
    assert code == 2
    code, _, _ = run(["evaluate", str(dataset), "--out", str(tmp_path), "--config", str(tmp_path / "none.json")], capsys)
    assert code == 2


def test_evaluate_codegen_precomputed(tmp_path, capsys):
    model = tmp_path / "code.json"
    model.write_text(json.dumps({
        "rows": [{"context": ["<a>"], "dist": {"return": 1.0}}, {"context": ["<b>"], "dist": {"return": 0.5, "x": 0.5}},
                 {"context": ["return"], "dist": {"1": 0.6, "2": 0.4}}, {"context": ["x"], "dist": {"1": 1.0}},
                 {"context": ["1"], "dist": {"<eos>": 1.0}}, {"context": ["2"], "dist": {"<eos>": 1.0}}],
        "prompt_classes": {"a*": ["<a>"], "b*": ["<b>"]}, "joiner": " ",
    }))
    data = tmp_path / "code.jsonl"
    data.write_text("".join(json.dumps({"id": i, "input": "f", "task": "codegen"}) + "\n" for i in ("a1", "a2", "b1", "b2")))
    judged = tmp_path / "judge.jsonl"
    judged.write_text("".join(
        json.dumps({"prompt_id": i, "syntax_ok": True, "tests_total": 2, "tests_passed": p}) + "\n"
        for i, p in (("a1", 2), ("a2", 2), ("b1", 1), ("b2", 0))
    ))
    out = tmp_path / "out"
    code, _, _ = run(["evaluate", str(data), "--out", str(out), "--backend", f"mock:{model}", "--methods",
                      "max_prob,avg_ent", "--judge-results", str(judged)], capsys)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert [m["metrics"] for m in summary["methods"]] == [{"auc": 1.0}, {"auc": 1.0}]


# -- report ----------------------------------------------------------------------------------------


def test_report_formats_and_ranking(dataset, tmp_path, capsys):
    out = tmp_path / "o"
    run(["evaluate", str(dataset), "--out", str(out)], capsys)
    code, text, _ = run(["report", "--records", str(out / "records.jsonl")], capsys)
    assert code == 0
    lines = text.strip().splitlines()
    assert len(lines) == 14 and sum("*" in line for line in lines[1:-1]) >= 3
    code, js, _ = run(["report", "--records", str(out / "records.jsonl"), "--format", "json"], capsys)
    rows = json.loads(js)["methods"]
    assert len(rows) == 12
    magnitudes = [abs(m["metrics"]["pearson"]) for m in rows]
    assert magnitudes == sorted(magnitudes, reverse=True)
    assert sum(m["top"]["pearson"] for m in rows) == 3
    code, csv_text, _ = run(["report", "--records", str(out / "records.jsonl"), "--format", "csv"], capsys)
    assert csv_text.splitlines()[0] == "method,family,variant,point,distance,metric_name,value,n,skipped"


def test_report_merge_and_errors(dataset, tmp_path, capsys):
    out = tmp_path / "o"
    run(["evaluate", str(dataset), "--out", str(out), "--methods", "max_prob"], capsys)
    lines = (out / "records.jsonl").read_text().splitlines()
    (tmp_path / "part1.jsonl").write_text("\n".join(lines[:60]) + "\n")
    (tmp_path / "part2.jsonl").write_text("\n".join(lines[50:]) + "\n")
    (tmp_path / "part3.jsonl").write_text("\n".join(lines[60:]) + "\n")
    code, _, err = run(["report", "--records", str(tmp_path / "part1.jsonl"), "--records", str(tmp_path / "part2.jsonl")], capsys)
    dup = json.loads(lines[50])["prompt_id"]
    assert code == 4 and dup in err
    code, merged, _ = run(["report", "--records", str(tmp_path / "part1.jsonl"), "--records",
                           str(tmp_path / "part3.jsonl"), "--format", "json"], capsys)
    assert code == 0 and json.loads(merged)["n_instances"] == 100
    (tmp_path / "empty.jsonl").write_text("")
    assert run(["report", "--records", str(tmp_path / "empty.jsonl")], capsys)[0] == 4
    (tmp_path / "bad.jsonl").write_text("{oops\n")
    assert run(["report", "--records", str(tmp_path / "bad.jsonl")], capsys)[0] == 4
    assert run(["report", "--records", str(tmp_path / "missing.jsonl")], capsys)[0] == 4


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "uqgen", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
