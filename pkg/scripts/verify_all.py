"""Run every property suite at full size and write one JSON report per suite.

    python scripts/verify_all.py --out results/ [--trials 200] [--seed 0]

The exit status is 1 if any enforced property is violated.
"""

import argparse
import sys
import time
from pathlib import Path

from ensemblage.cli import dumps_json
from ensemblage.verify import SUITES

DIMS = {"measures": (2, 3, 4), "coherence": (2, 3), "ensemble": (2, 3), "quantumness": (2,)}
TRIALS = {"quantumness": 100}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    failures = 0
    for name, suite in SUITES.items():
        t0 = time.perf_counter()
        trials = min(args.trials, TRIALS.get(name, args.trials))
        results = suite(trials=trials, seed=args.seed, dims=DIMS[name])
        elapsed = time.perf_counter() - t0
        for r in results:
            flag = "ok  " if r.passed else "FAIL"
            print(f"{flag} {name:<12} {r.property_id:<36} {r.max_violation: .3e} (tol {r.tolerance:g})")
            failures += not r.passed
        print(f"     {name}: {elapsed:.1f}s")
        report = {"suite": name, "trials": trials, "seed": args.seed, "dims": list(DIMS[name]),
                  "properties": [r.as_dict() for r in results]}
        (out / f"{name}.json").write_text(dumps_json(report))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
