"""Tabulate catalog quantumness against the grid oracle and the reference values.

    python scripts/catalog_table.py [--restarts 24] [--seed 0]
"""

import argparse

import numpy as np

from ensemblage import CATALOG
from ensemblage.measures import MeasureKind
from ensemblage.quantumness import OptimizerConfig, grid_oracle_qubit, quantumness

# closed forms for the optimal basis, used as a third column
EXACT = {
    ("b92", "fidelity"): 1 - np.cos(np.pi / 8),
    ("b92", "affinity"): 1 - np.sqrt(3) / 2,
    ("bb84", "fidelity"): 1 - np.cos(np.pi / 8),
    ("bb84", "affinity"): 1 - np.sqrt(3) / 2,
    ("trine", "fidelity"): 1 - (1 + np.sqrt(3)) / 3,
    ("trine", "affinity"): (2 / 3) * (1 - np.sqrt(10) / 4),
    ("six_state", "fidelity"): 1 - np.sqrt((1 + 1 / np.sqrt(3)) / 2),
    ("six_state", "affinity"): 1 - np.sqrt(2 / 3),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--restarts", type=int, default=24)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--steps", type=int, default=400)
    args = parser.parse_args()
    cfg = OptimizerConfig(restarts=args.restarts, seed=args.seed)

    header = f"{'ensemble':<10} {'measure':<9} {'optimizer':>11} {'grid':>11} {'closed form':>11} {'reference':>9}"
    print(header)
    print("-" * len(header))
    for name, make in CATALOG.items():
        named = make()
        for kind in (MeasureKind.AFFINITY, MeasureKind.FIDELITY):
            q = quantumness(kind, named.ensemble, cfg).value
            grid = grid_oracle_qubit(kind, named.ensemble, args.steps)
            paper = named.paper_affinity if kind is MeasureKind.AFFINITY else named.paper_fidelity
            exact = EXACT[(name, kind.value)]
            print(f"{name:<10} {kind.value:<9} {q:>11.6f} {grid:>11.6f} {exact:>11.6f} {paper:>9.3f}")


if __name__ == "__main__":
    main()
