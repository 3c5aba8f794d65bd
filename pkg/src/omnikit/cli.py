"""Command-line front end.

    omnikit gen calib-scene --seed 7 --cams 8 --boards 4 --out obs.json
    omnikit calibrate --obs obs.json --mode full --out calib.json
    omnikit placement sweep --predictor lookup --seed 42 --out table.csv

Exit codes: 0 success, 2 bad input or flags, 3 a solver refused (domain error).
Every flag of a subcommand can also come from ``--config file.json`` whose keys
are the flag names (dashes or underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import ConfigError, DomainError, SchemaError
from .fileio import (
    csv_text, load_calibration, read_json, read_jsonl, save_calibration, write_csv, write_json, write_jsonl,
)
from .geometry import RigidPose

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN = 0, 2, 3


# ---------------------------------------------------------------- helpers

def _pose(v, what="pose") -> RigidPose:
    M = np.asarray(v, dtype=float)
    if M.size != 16:
        raise SchemaError(f"{what}: expected 16 row-major floats")
    return RigidPose.from_matrix(M.reshape(4, 4))


def _pose_list(path, key):
    data = read_json(path)
    if isinstance(data, dict):
        data = data.get(key)
    if not isinstance(data, list):
        raise SchemaError(f"{path}: expected a list of 4x4 poses")
    return [_pose(p, f"{path}[{i}]") for i, p in enumerate(data)]


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise ConfigError(f"bad integer list {text!r}") from e


def _freeze_points(text):
    """``a:b:n`` is n equal steps from a to b, both ends included."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as e:
        raise ConfigError(f"--freeze expects start:stop:steps, got {text!r}") from e
    if n < 1 or not 0.0 <= a <= b <= 1.0:
        raise ConfigError("--freeze needs 0 <= start <= stop <= 1 and steps >= 1")
    return [a + (b - a) * i / n for i in range(n + 1)]


# ---------------------------------------------------------------- subcommands

def cmd_gen(a):
    if a.what == "calib-scene":
        from .calibration.pipeline import observations_to_dict, truth_to_dict
        from .calibration.synthetic import generate_calib_scene

        scene = generate_calib_scene(a.seed, a.cams, a.boards, a.noise)
        write_json(a.out, observations_to_dict(scene.observations, scene.boards, scene.intrinsics()))
        if a.truth:
            write_json(a.truth, truth_to_dict(scene))
    elif a.what == "handeye":
        from .calibration.handeye import generate_handeye_data

        Z, X, boards, flanges = generate_handeye_data(a.seed, a.n, a.noise_t, a.noise_rot)
        if not a.fk_out:
            raise ConfigError("gen handeye needs --fk-out for the flange poses")
        write_json(a.out, [p.matrix().reshape(-1) for p in boards])
        write_json(a.fk_out, [p.matrix().reshape(-1) for p in flanges])
        if a.truth:
            write_json(a.truth, {"Z": Z.matrix().reshape(-1), "X": X.matrix().reshape(-1)})
    elif a.what == "rig":
        from .rig import room_rig

        save_calibration(a.out, room_rig(a.cams, a.seed))
    elif a.what == "cloud":
        from .rig import room_cloud

        write_csv(a.out, ["x", "y", "z"], room_cloud(a.seed, a.spacing).tolist())
    elif a.what == "reports":
        from .rig import room_rig
        from .tracking.synthetic import make_reports, walker_paths

        cams = room_rig(a.cams, a.seed)
        joints = walker_paths(a.people, a.frames, a.seed)
        write_jsonl(a.out, make_reports(cams, joints, a.seed, a.noise))
        if a.calib_out:
            save_calibration(a.calib_out, cams)
        if a.truth:
            write_json(a.truth, {"joints": joints})
    elif a.what == "human":
        from .safety.recording import generate_human, save_recording

        save_recording(a.out, generate_human(a.seed, a.duration, a.pattern))
    return EXIT_OK


def cmd_calibrate(a):
    from .calibration.pipeline import calibrate, load_observations

    obs, boards, intrinsics = load_observations(a.obs)
    sol, stats = calibrate(obs, boards, intrinsics, a.mode, a.world_board)
    stats = dict(stats, mode=a.mode, n_cameras=len(sol.cameras), n_boards=len(sol.boards))
    save_calibration(a.out, list(sol.camera_models().values()), stats)
    return EXIT_OK


def cmd_handeye(a):
    from .calibration.handeye import solve_hand_eye

    sol = solve_hand_eye(_pose_list(a.boards, "boards"), _pose_list(a.fk, "fk"))
    write_json(a.out, {
        "Z": sol.Z.matrix().reshape(-1), "X": sol.X.matrix().reshape(-1),
        "residual_max": sol.residual_max, "residual_mean": sol.residual_mean,
        "rot_residual_max": sol.rot_residual_max, "trans_residual_max": sol.trans_residual_max,
    })
    return EXIT_OK


def cmd_track(a):
    from .tracking.pipeline import output_record, run_tracking

    cams = load_calibration(a.calib)
    try:
        out, dropped = run_tracking(read_jsonl(a.reports), cams, seed=a.seed, fps=a.fps)
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"{a.reports}: malformed report ({e})") from e
    write_jsonl(a.out, [output_record(r, smoothed=not a.raw) for r in out])
    print(f"{len(out)} track records, {dropped} frames dropped", file=sys.stderr)
    return EXIT_OK


def cmd_coverage(a):
    from .coverage import M_VALUES, coverage_sweep, visibility_matrix, voxelize

    cams = load_calibration(a.calib)
    try:
        pts = np.loadtxt(a.cloud, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigError(f"{a.cloud}: cannot read point cloud ({e})") from e
    if pts.shape[1] != 3:
        raise SchemaError(f"{a.cloud}: expected x,y,z columns")
    vis = visibility_matrix(cams, voxelize(pts, a.resolution), resolution=a.resolution)
    counts = _int_list(a.counts) if a.counts else [len(cams)]
    M_list = _int_list(a.M) if a.M else list(M_VALUES)
    res = coverage_sweep(vis, counts, a.subsets, M_list, a.seed)
    write_csv(a.out, ["count", "M", "mean_coverage"], [[n, M, res[(n, M)]] for n in counts for M in M_list])
    return EXIT_OK


def cmd_simulate(a):
    from dataclasses import replace

    from .safety.policy import PolicyConfig
    from .safety.sim import SimScenario, load_scenario, memory_freeze_sweep, simulate, table_policies, write_metrics

    sc = load_scenario(a.scenario) if a.scenario else SimScenario()
    if a.seed is not None:
        sc = replace(sc, seed=a.seed)
    if a.action == "sweep":
        if not a.freeze:
            raise ConfigError("simulate sweep needs --freeze start:stop:steps")
        if sc.policy.kind != "dynamic_learned":
            sc = sc.with_policy(PolicyConfig("dynamic_learned"))
        rows = memory_freeze_sweep(sc, _freeze_points(a.freeze))
        write_csv(a.out, ["fraction", "human_hits", "avg_cycle_s"], rows)
        return EXIT_OK
    if a.policy == "table":
        policies = table_policies()
    elif a.policy == "static":
        policies = [PolicyConfig("static", r=a.radius)]
    elif a.policy:
        policies = [PolicyConfig(a.policy)]
    else:
        policies = [sc.policy]
    metrics, events = [], []
    for pol in policies:
        for k in range(a.trials):
            run = replace(sc.with_policy(pol), seed=sc.seed + k)
            log = [] if a.log else None
            metrics.append(simulate(run, log))
            if log is not None:
                events += [dict(e, policy=pol.label, seed=run.seed) for e in log]
    write_metrics(a.out, metrics)
    if a.log:
        write_jsonl(a.log, events)
    return EXIT_OK


def cmd_handover(a):
    from .handover.kinematics import BUILTIN_CHAINS, KinematicChain
    from .handover.planner import HandoverConfig, plan_handover

    bases = read_json(a.bases)
    try:
        bg, br = _pose(bases["giver"], "giver base"), _pose(bases["receiver"], "receiver base")
    except (KeyError, TypeError) as e:
        raise SchemaError(f"{a.bases}: needs 'giver' and 'receiver' 4x4 poses") from e
    if a.chain in BUILTIN_CHAINS:
        chain = BUILTIN_CHAINS[a.chain]()
    else:
        d = read_json(a.chain)
        try:
            chain = KinematicChain(d.get("name", "custom"), d["dh"], d["lower"], d["upper"],
                                   _pose(d["tool"], "tool") if "tool" in d else RigidPose.identity(),
                                   home=d.get("home"))
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"{a.chain}: bad chain ({e})") from e
    cfg = HandoverConfig(pitch=a.pitch, n_theta=a.n_theta, n_phi=a.n_phi, phi_max=np.deg2rad(a.phi_max),
                         restarts=a.restarts)
    cand = plan_handover(bg, br, (chain, chain), a.category, cfg, seed=a.seed)
    write_json(a.out, dict(cand.to_dict(), category=a.category, chain=chain.name, seed=a.seed))
    return EXIT_OK


def cmd_placement(a):
    from .placement import expected_lookup_accuracy, get_predictor, sweep

    pred = get_predictor(a.predictor)
    rows = sweep(combos=a.combos, seed=a.seed, predictor=pred, test_only_remaining=a.test_only_remaining,
                 sampled=a.sampled)
    header = ["k", "percent", "mean_ratio", "n_combos"]
    out = [[k, 100.0 * r, r, n] for k, r, n in rows]
    if a.oracle:
        header.append("oracle_percent")
        out = [row + [100.0 * expected_lookup_accuracy(row[0])] for row in out]
    if a.out:
        write_csv(a.out, header, out)
    else:
        sys.stdout.write(csv_text(header, out))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="omnikit", description=__doc__.split("\n")[0])
    p.add_argument("--config", help="JSON file whose keys mirror the subcommand flags")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write synthetic inputs")
    g.add_argument("what", choices=["calib-scene", "handeye", "rig", "cloud", "reports", "human"])
    g.add_argument("--seed", type=int, default=0, help="default 0")
    g.add_argument("--out", required=True)
    g.add_argument("--truth", help="also write the ground truth here")
    g.add_argument("--cams", type=int, default=None, help="calib-scene: 8, rig/reports: 48")
    g.add_argument("--boards", type=int, default=4)
    g.add_argument("--noise", type=float, default=None, help="pixel noise (calib-scene 0, reports 1)")
    g.add_argument("--n", type=int, default=20, help="handeye: number of poses")
    g.add_argument("--noise-t", type=float, default=0.0)
    g.add_argument("--noise-rot", type=float, default=0.0)
    g.add_argument("--fk-out", help="handeye: flange poses file")
    g.add_argument("--spacing", type=float, default=0.05)
    g.add_argument("--people", type=int, default=2)
    g.add_argument("--frames", type=int, default=90)
    g.add_argument("--calib-out", help="reports: also write the rig calibration")
    g.add_argument("--duration", type=float, default=120.0)
    g.add_argument("--pattern", choices=["wander", "adversarial"], default="wander")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("calibrate", help="extrinsic calibration from board observations")
    c.add_argument("--obs", required=True)
    c.add_argument("--mode", choices=["extrinsics_only", "full", "full_with_intrinsics"], default="full")
    c.add_argument("--world-board", type=int, default=0)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_calibrate)

    h = sub.add_parser("handeye", help="robot base registration from board and flange poses")
    h.add_argument("--boards", required=True, help="JSON list of board-to-world 4x4 poses")
    h.add_argument("--fk", required=True, help="JSON list of flange-to-base 4x4 poses")
    h.add_argument("--out", required=True)
    h.set_defaults(func=cmd_handeye)

    t = sub.add_parser("track", help="replay keypoint reports into 3D tracks")
    t.add_argument("--reports", required=True)
    t.add_argument("--calib", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=0, help="RANSAC stream, default 0")
    t.add_argument("--fps", type=float, default=30.0)
    t.add_argument("--raw", action="store_true", help="write unsmoothed joints")
    t.set_defaults(func=cmd_track)

    v = sub.add_parser("coverage", help="voxel coverage for camera subsets")
    v.add_argument("--calib", required=True)
    v.add_argument("--cloud", required=True, help="CSV with header x,y,z")
    v.add_argument("--counts", help="comma-separated camera counts (default: all cameras)")
    v.add_argument("--M", help="comma-separated visibility thresholds (default 1,2,4,6,10,15)")
    v.add_argument("--resolution", type=float, default=0.01)
    v.add_argument("--subsets", type=int, default=25)
    v.add_argument("--seed", type=int, default=0, help="subset sampling, default 0")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_coverage)

    s = sub.add_parser("simulate", help="safety replay trials or a memory-freeze sweep")
    s.add_argument("action", nargs="?", choices=["run", "sweep"], default="run")
    s.add_argument("--scenario", help="scenario JSON (default: built-in workcell, synthetic human)")
    s.add_argument("--policy", help="non_aware | static | dynamic | dynamic_learned | table")
    s.add_argument("--radius", type=float, default=0.5, help="static policy radius in m")
    s.add_argument("--trials", type=int, default=1, help="consecutive seeds per policy")
    s.add_argument("--seed", type=int, default=None, help="overrides the scenario seed")
    s.add_argument("--freeze", help="sweep: start:stop:steps over the trial fraction, e.g. 0:1:48")
    s.add_argument("--out", required=True)
    s.add_argument("--log", help="events JSONL")
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("handover", help="robot-to-robot handover pose search")
    o.add_argument("action", choices=["plan"])
    o.add_argument("--bases", required=True, help="JSON with 'giver' and 'receiver' 4x4 base poses")
    o.add_argument("--chain", default="arm7", help="built-in name (arm7, planar2) or chain JSON")
    o.add_argument("--category", choices=["spherical", "elongated"], default="spherical")
    o.add_argument("--pitch", type=float, default=0.05)
    o.add_argument("--n-theta", type=int, default=8)
    o.add_argument("--n-phi", type=int, default=3)
    o.add_argument("--phi-max", type=float, default=20.0, help="degrees")
    o.add_argument("--restarts", type=int, default=4)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_handover)

    pl = sub.add_parser("placement", help="placement prediction sweep over demonstration counts")
    pl.add_argument("action", choices=["sweep"])
    pl.add_argument("--predictor", default="lookup")
    pl.add_argument("--seed", type=int, default=42)
    pl.add_argument("--combos", type=int, default=15)
    pl.add_argument("--test-only-remaining", action="store_true")
    pl.add_argument("--sampled", action="store_true", help="draw random guesses instead of scoring expectations")
    pl.add_argument("--oracle", action="store_true", help="add the closed-form expectation column")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_placement)
    return p


_GEN_DEFAULTS = {"calib-scene": {"cams": 8, "noise": 0.0}, "rig": {"cams": 48}, "reports": {"cams": 48, "noise": 1.0}}


def _apply_config(parser, argv):
    """Re-parse with defaults taken from --config; explicit flags still win."""
    head = argparse.ArgumentParser(add_help=False)
    head.add_argument("--config")
    pre, _ = head.parse_known_args(argv)
    if not pre.config:
        return parser.parse_args(argv)
    cfg = read_json(pre.config)
    if not isinstance(cfg, dict):
        raise SchemaError(f"{pre.config}: expected a JSON object")
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {act.dest for act in sub._actions}
    given = {tok.split("=")[0].lstrip("-").replace("-", "_") for tok in argv if tok.startswith("--")}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise SchemaError(f"{pre.config}: unknown key {key!r} for {args.command}")
        if dest not in given:
            setattr(args, dest, val)
    return args


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    except ConfigError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "gen":
        for k, v in _GEN_DEFAULTS.get(args.what, {}).items():
            if getattr(args, k) is None:
                setattr(args, k, v)
        args.noise = 0.0 if args.noise is None else args.noise
        args.cams = 8 if args.cams is None else args.cams
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, KeyError, TypeError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
