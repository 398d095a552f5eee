"""Built-in judge process for the toy language (speaks the judge stdin/stdout protocol)."""

import json
import sys

from .judge import toy_judge


def main() -> int:
    req = json.load(sys.stdin)
    if req.get("language", "toy") != "toy":
        print(f"toy judge cannot run language {req.get('language')!r}", file=sys.stderr)
        return 2
    res = toy_judge(req["code"], req.get("tests", []))
    json.dump({"syntax_ok": res.syntax_ok, "tests_total": res.tests_total, "tests_passed": res.tests_passed}, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
