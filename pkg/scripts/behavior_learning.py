"""Plain dynamic vs. learned dynamic against a person approaching from one sector."""
import argparse

import numpy as np

from omnikit.safety.policy import PolicyConfig
from omnikit.safety.sim import learning_scenario, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()

    print("seed  hits_dyn  hits_learned  cycle_dyn  cycle_learned  delta_%  warmup_s")
    cyc = []
    for seed in range(args.seeds):
        sc = learning_scenario(seed)
        d = simulate(sc.with_policy(PolicyConfig("dynamic")))
        lrn = simulate(sc)
        cyc.append((d.avg_cycle_s, lrn.avg_cycle_s))
        delta = 100 * (lrn.avg_cycle_s - d.avg_cycle_s) / d.avg_cycle_s
        print(f"{seed:4d} {d.human_hits:9d} {lrn.human_hits:13d} {d.avg_cycle_s:10.2f} {lrn.avg_cycle_s:14.2f} "
              f"{delta:8.2f} {lrn.warmup_s}")
    d, l = np.mean(cyc, axis=0)
    print(f"mean cycle delta {100 * (l - d) / d:.2f} %")


if __name__ == "__main__":
    main()
