import math

import pytest

from uqgen.core import Generation, Prompt, make_step
from uqgen.generators import MockModel


def gen_from_probs(steps, prompt_id="p", joiner=""):
    """Generation from ``[(token, {tok: p, ...}), ...]`` with the emitted token's p taken from its row."""
    out = []
    for pos, (tok, dist) in enumerate(steps):
        topk = [(t, math.log(p)) for t, p in dist.items() if p > 0]
        out.append(make_step(tok, math.log(dist[tok]), topk, pos)[0])
    return Generation(prompt_id, joiner.join(t for t, _ in steps), tuple(out), 0.0, None, "test")


@pytest.fixture
def chain_model():
    """a -> {A:0.7, B:0.3}; A -> C; B -> C; C -> stop."""
    return MockModel(
        rows={
            ("<s>",): {"A": 0.7, "B": 0.3},
            ("A",): {"C": 1.0},
            ("B",): {"C": 1.0},
            ("C",): {"<eos>": 1.0},
        },
        prompt_classes={"*": ["<s>"]},
    )


@pytest.fixture
def prompt():
    return Prompt("p1", "hello", "qa")


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = test_acceptance.report_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
