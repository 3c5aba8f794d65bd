"""Best handover candidate per object category for two facing 7-axis arms."""
import argparse
import json

import numpy as np

from omnikit.geometry import RigidPose, rot_z
from omnikit.handover import HandoverConfig, plan_handover, seven_axis_arm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--distance", type=float, default=1.0, help="base separation in m")
    ap.add_argument("--pitch", type=float, default=0.10)
    ap.add_argument("--n-theta", type=int, default=4)
    ap.add_argument("--n-phi", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = RigidPose(np.eye(3), [0.0, 0.0, 0.0])
    r = RigidPose(rot_z(np.pi), [args.distance, 0.0, 0.0])
    arm = seven_axis_arm()
    cfg = HandoverConfig(pitch=args.pitch, n_theta=args.n_theta, n_phi=args.n_phi)
    for category in ("spherical", "elongated"):
        best = plan_handover(g, r, (arm, arm), category, cfg, seed=args.seed)
        print(category, "position", np.round(best.position, 3).tolist(), "total", round(best.total, 4))
        print(json.dumps({k: round(v, 4) for k, v in best.scores.items()}))


if __name__ == "__main__":
    main()
