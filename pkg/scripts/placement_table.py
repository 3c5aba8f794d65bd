"""Lookup placement accuracy vs. number of demonstrated objects, with the closed-form expectation."""
import argparse

from omnikit.placement import expected_lookup_accuracy, get_predictor, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--predictor", default="lookup")
    ap.add_argument("--sampled", action="store_true")
    args = ap.parse_args()

    rows = sweep(seed=args.seed, predictor=get_predictor(args.predictor), sampled=args.sampled)
    print(" k  success_%  expected_%")
    for k, r, _ in rows:
        print(f"{k:2d} {100 * r:10.1f} {100 * expected_lookup_accuracy(k):11.1f}")


if __name__ == "__main__":
    main()
