"""Hits / cycle time / triggers for every trigger policy, averaged over seeds."""
import argparse
from collections import defaultdict

import numpy as np

from omnikit.safety.sim import SimScenario, simulate, table_policies


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--items", type=int, default=12)
    args = ap.parse_args()

    rows = defaultdict(list)
    for seed in range(args.seeds):
        sc = SimScenario(seed=seed, n_items=args.items)
        for pol in table_policies():
            m = simulate(sc.with_policy(pol))
            rows[pol.label].append((m.human_hits, m.avg_cycle_s, m.triggers, m.fallback_s))

    print(f"{'policy':<18} {'hits':>8} {'cycle_s':>8} {'triggers':>9} {'fallback_s':>11}")
    for label, vals in rows.items():
        h, c, t, f = np.mean(vals, axis=0)
        print(f"{label:<18} {h:8.1f} {c:8.2f} {t:9.1f} {f:11.1f}")


if __name__ == "__main__":
    main()
