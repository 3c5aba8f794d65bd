"""Hits and cycle time as the behavior memory is frozen at later and later points of a session."""
import argparse

import numpy as np

from omnikit.safety.sim import learning_scenario, memory_freeze_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--steps", type=int, default=12)
    args = ap.parse_args()

    fractions = np.linspace(0.0, 1.0, args.steps + 1).tolist()
    print("fraction  hits  cycle_s")
    for f, hits, cycle in memory_freeze_sweep(learning_scenario(args.seed), fractions):
        print(f"{f:8.3f} {hits:5d} {cycle:8.2f}")


if __name__ == "__main__":
    main()
