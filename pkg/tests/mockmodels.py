"""Small hand-built mock models with known answers."""

from uqgen.generators import MockModel


def twenty_token_model(point=7, alternatives=None):
    """A 20-token chain t0..t19, one-hot except at ``point``.

    At ``point`` the row is {t<point>: 0.4, B: 0.3, C: 0.2, D: 0.1} (or the given
    alternatives); every alternative rejoins the chain, so a substitution
    changes exactly one token of the output.
    """
    alternatives = alternatives or {"B": 0.3, "C": 0.2, "D": 0.1}
    rows = {}
    prev = ["<s>"]
    for j in range(20):
        tok = f"t{j}"
        if j == point:
            dist = {tok: round(1.0 - sum(alternatives.values()), 12), **alternatives}
        else:
            dist = {tok: 1.0}
        for ctx in prev:
            rows[(ctx,)] = dist
        prev = [tok] + (list(alternatives) if j == point else [])
    for ctx in prev:
        rows[(ctx,)] = {"<eos>": 1.0}
    return MockModel(rows=rows, prompt_classes={"*": ["<s>"]}, joiner=" ", max_len=40, id="mock:twenty")
