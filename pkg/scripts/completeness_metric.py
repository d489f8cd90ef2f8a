"""Compare inference against brute force on random straight-line programs.

Soundness (validated witnesses) is asserted in the test suite; this script
measures how many brute-force witnesses inference also finds.

    python3 scripts/completeness_metric.py --n 200 --seed 0 --spec not_unique
"""

from __future__ import annotations

import argparse
import random
import time
from pathlib import Path

from tracewit.infer import Budgets, infer_witness
from tracewit.lang import random_program
from tracewit.oracle import OracleConfig, brute_force_witness, validate_witness
from tracewit.syntax import parse_apis, parse_module

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--spec", default="not_unique")
    ap.add_argument("--max-calls", type=int, default=4)
    ap.add_argument("--show-misses", type=int, default=0)
    args = ap.parse_args()

    apis = parse_apis((CORPUS / "apis.tw").read_text())
    spec = parse_module((CORPUS / "specs.tw").read_text(), apis).specs[args.spec]
    rng = random.Random(args.seed)
    counts = dict(programs=0, brute=0, inferred=0, validated=0, false=0, missed=0)
    slowest = 0.0
    shown = 0
    for i in range(args.n):
        prog = random_program(rng, apis, args.max_calls, name=f"r{i}")
        t = time.monotonic()
        res = infer_witness(prog, apis, spec.sre, spec.vars, Budgets())
        slowest = max(slowest, time.monotonic() - t)
        bf = brute_force_witness(prog, apis, spec.sre, spec.vars, OracleConfig())
        counts["programs"] += 1
        counts["brute"] += bf is not None
        if res.judgment is not None:
            counts["inferred"] += 1
            ok = validate_witness(res.judgment, prog, apis, res.hypothesis).ok
            counts["validated"] += ok
            counts["false"] += not ok
        elif bf is not None:
            counts["missed"] += 1
            if shown < args.show_misses:
                shown += 1
                print("missed:", prog)
    for k, v in counts.items():
        print(f"{k:>10}: {v}")
    if counts["brute"]:
        print(f"completeness: {counts['validated'] / counts['brute']:.3f}")
    print(f"slowest inference: {slowest:.3f}s")


if __name__ == "__main__":
    main()
