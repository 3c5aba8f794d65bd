"""Coverage fraction vs. camera count for several view thresholds on the synthetic room rig."""
import argparse

from omnikit.coverage import M_VALUES, coverage_sweep, visibility_matrix, voxelize
from omnikit.rig import room_cloud, room_rig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cams", type=int, default=48)
    ap.add_argument("--counts", default="12,24,36,40,48")
    ap.add_argument("--spacing", type=float, default=0.05)
    ap.add_argument("--subsets", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cams = room_rig(args.cams, args.seed)
    vis = visibility_matrix(cams, voxelize(room_cloud(args.seed, args.spacing), 0.01), resolution=0.01)
    counts = [int(c) for c in args.counts.split(",")]
    res = coverage_sweep(vis, counts, args.subsets, M_VALUES, args.seed)
    print("count " + " ".join(f"M>={m:<4d}" for m in M_VALUES))
    for n in counts:
        print(f"{n:5d} " + " ".join(f"{res[(n, m)]:6.3f}" for m in M_VALUES))


if __name__ == "__main__":
    main()
