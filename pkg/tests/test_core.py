import math

import pytest

from uqgen.core import (
    METHOD_NAMES,
    Generation,
    MethodId,
    Prompt,
    TokenStep,
    UncertaintyScore,
    all_methods,
    dumps_generation,
    generation_from_record,
    generation_to_record,
    loads_generation,
    make_step,
    validate_generation,
)

from .conftest import gen_from_probs


def test_prompt_rejects_empty_text_and_unknown_task():
    with pytest.raises(ValueError):
        Prompt("x", "")
    with pytest.raises(ValueError):
        Prompt("x", "hi", task="poetry")


def test_make_step_sorts_and_injects_missing_token():
    step, injected = make_step("z", math.log(0.05), [("a", math.log(0.2)), ("b", math.log(0.6))], 0)
    assert injected
    assert [t for t, _ in step.topk] == ["b", "a", "z"]
    step, injected = make_step("a", math.log(0.2), [("a", math.log(0.2)), ("b", math.log(0.6))], 0)
    assert not injected and len(step.topk) == 2


def test_well_formed_generation_has_no_violations():
    g = gen_from_probs([("a", {"a": 0.5, "b": 0.5}), ("b", {"b": 0.9, "c": 0.1}), ("c", {"c": 1.0})])
    assert validate_generation(g) == []


def test_positive_logprob_is_one_violation():
    step = TokenStep("a", 0.1, (("a", 0.1),), 0)
    g = Generation("p", "a", (step,), 0.0, None, "t")
    problems = validate_generation(g)
    # the topk entry shares the bad value, so the sign rule fires on both fields
    assert any("logprob > 0" in p and ".logprob" in p for p in problems)
    step = TokenStep("a", 0.1, (("a", math.log(0.5)),), 0)
    problems = validate_generation(Generation("p", "a", (step,), 0.0, None, "t"))
    assert [p for p in problems if "logprob > 0" in p] == ["steps[0].logprob: logprob > 0"]


def test_topk_mass_above_one_is_flagged():
    step, _ = make_step("a", math.log(0.9), [("a", math.log(0.9)), ("b", math.log(0.8))], 0)
    problems = validate_generation(Generation("p", "a", (step,), 0.0, None, "t"))
    assert len(problems) == 1 and "topk mass > 1" in problems[0]
    assert "1.700000" in problems[0]


def test_validate_reports_text_and_order_problems():
    bad = TokenStep("a", math.log(0.2), (("a", math.log(0.2)), ("b", math.log(0.7))), 3)
    problems = validate_generation(Generation("p", "xyz", (bad,), -1.0, None, "t", finish_reason="odd"))
    joined = "\n".join(problems)
    for needle in ("temperature", "finish_reason", "text:", "position", "not sorted"):
        assert needle in joined


def test_unscored_forced_step_is_valid():
    step = TokenStep("x", None, (), 0)
    assert validate_generation(Generation("p", "x", (step,), 0.0, None, "t")) == []


def test_cache_record_round_trip():
    g = gen_from_probs([("a", {"a": 0.5, "b": 0.5}), ("b", {"b": 1.0})])
    g = Generation(g.prompt_id, g.text, g.steps, 0.7, 42, "mock", "length", {"injected": [1]})
    rec = generation_to_record(g)
    assert set(rec) >= {"prompt_id", "text", "temperature", "seed", "backend_id", "finish_reason", "steps"}
    assert set(rec["steps"][0]) == {"token", "logprob", "position", "topk"}
    assert generation_from_record(rec) == g
    assert loads_generation(dumps_generation(g)) == g


def test_twelve_methods_for_a_fixed_distance():
    methods = all_methods("bleu")
    assert len(methods) == 12
    assert len(set(methods)) == 12
    fam = [m.family for m in methods]
    assert fam.count("single") == 4 and fam.count("sample") == 2 and fam.count("perturb") == 6
    assert [m.name for m in methods] == list(METHOD_NAMES)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="single", variant="vr"),
        dict(family="sample", variant="max_prob", distance_id="bleu"),
        dict(family="perturb", variant="vr", distance_id="bleu"),
        dict(family="sample", variant="vr", point="max_ent", distance_id="bleu"),
        dict(family="sample", variant="vr"),
        dict(family="single", variant="max_prob", distance_id="bleu"),
        dict(family="perturb", variant="vr", point="middle", distance_id="bleu"),
    ],
)
def test_method_id_invariants(kwargs):
    with pytest.raises(ValueError):
        MethodId(**kwargs)


def test_method_names_and_display_round_trip():
    for name in METHOD_NAMES:
        m = MethodId.parse(name, "rouge_l")
        assert m.name == name
        assert m.distance_id == (None if m.family == "single" else "rouge_l")
    assert MethodId.parse("maxdiff_vro").display == "MaxDiff VRO"
    assert MethodId.parse("avg_prob").display == "Average Prob"
    with pytest.raises(ValueError):
        MethodId.parse("median_vr")


def test_uncertainty_score_is_immutable():
    s = UncertaintyScore(MethodId.parse("max_prob"), 0.3, (), {})
    with pytest.raises(AttributeError):
        s.value = 1.0
