"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line with its measured numbers; the lines are
written to the terminal when the module finishes, even under output capture.
"""
import json
import time

import numpy as np
import pytest

from oracles import dlt_point, greedy_farthest_removal, unique_consensus_cases
from omnikit.calibration.handeye import generate_handeye_data, solve_hand_eye
from omnikit.calibration.pipeline import calibrate
from omnikit.calibration.synthetic import generate_calib_scene
from omnikit.cli import run
from omnikit.contact import EmaState, Wrench, admittance_velocity, ema_wrench, rate_limit, shift_torque_to_ee
from omnikit.coverage import coverage_fraction, farthest_point_order, visibility_matrix, voxelize
from omnikit.geometry import pose_error
from omnikit.placement import expected_lookup_accuracy, get_predictor, sweep
from omnikit.rig import room_cloud, room_rig
from omnikit.safety.cbf import ALPHA, CbfScenario, qp_cbf_step, simulate_cbf
from omnikit.safety.policy import PolicyConfig
from omnikit.safety.sim import SimScenario, learning_scenario, memory_freeze_sweep, simulate, table_policies
from omnikit.tracking import triangulate_ransac
from omnikit.tracking.pipeline import run_tracking
from omnikit.tracking.synthetic import evaluate, make_reports, walker_paths

_LINES = []


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    if tr is None:
        return
    tr.write_line("")
    for line in sorted(_LINES):
        tr.write_line(line)


def report(n, name, ok, detail):
    _LINES.append(f"criterion {n:2d} [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def test_c01_calibration():
    t0 = time.perf_counter()
    sc = generate_calib_scene(0, 8, 4, 0.0)
    sol, _ = calibrate(sc.observations, sc.boards, sc.intrinsics())
    elapsed = time.perf_counter() - t0
    errs = [pose_error(sol.cameras[c.id], c.pose) for c in sc.cameras]
    errs += [pose_error(sol.boards[b], p) for b, p in sc.board_poses.items()]
    dt, dr = np.max(errs, axis=0)
    means = []
    for seed in range(20):
        s = generate_calib_scene(seed, 8, 4, 0.5)
        means.append(calibrate(s.observations, s.boards, s.intrinsics())[1]["mean_px"])
    ok = dt < 1e-6 and dr < 1e-6 and elapsed < 10 and 0.3 <= min(means) and max(means) <= 0.7
    report(1, "calibration", ok, f"max err {dt:.1e} m / {dr:.1e} rad in {elapsed:.2f} s; "
                                 f"sigma 0.5 px mean residual in [{min(means):.3f}, {max(means):.3f}] px")


def test_c02_handeye():
    Z, X, boards, flanges = generate_handeye_data(0, 20)
    sol = solve_hand_eye(boards, flanges)
    clean = max(max(pose_error(sol.Z, Z)), max(pose_error(sol.X, X)))
    good = 0
    for seed in range(50):
        Z, X, boards, flanges = generate_handeye_data(seed, 20, 1e-3, np.deg2rad(0.1))
        good += pose_error(solve_hand_eye(boards, flanges).Z, Z)[0] < 5e-3
    ok = clean < 1e-8 and good >= 45
    report(2, "hand-eye", ok, f"noiseless err {clean:.1e}; noisy Z < 5 mm on {good}/50 seeds")


def test_c03_tracking():
    matched = 0
    for uv, P, inliers in unique_consensus_cases(2024, 1000):
        pt, got = triangulate_ransac(uv, P)
        matched += got.tolist() == inliers and np.linalg.norm(pt - dlt_point(uv[inliers], P[inliers])) < 1e-6
    cams = room_rig(40, 0)
    joints = walker_paths(3, 90, 0)
    reports = make_reports(cams, joints, 0, 1.0)
    t0 = time.perf_counter()
    out, _ = run_tracking(reports, cams, 0)
    elapsed = time.perf_counter() - t0
    err, swaps = evaluate(out, joints)
    ok = matched == 1000 and err < 0.015 and swaps == 0 and elapsed < 60
    report(3, "tracking", ok, f"oracle match {matched}/1000; 3-person scene {1000 * err:.2f} mm, "
                              f"{swaps} swaps, {elapsed:.1f} s")


def test_c04_coverage():
    cams = room_rig(48)
    vis = visibility_matrix(cams, voxelize(room_cloud(), 0.01), resolution=0.01)
    full = coverage_fraction(vis, range(48), 4)
    rng = np.random.default_rng(0)
    monotone = True
    for _ in range(20):
        perm = rng.permutation(48)
        small, big = perm[:rng.integers(1, 48)], perm
        for M in (1, 2, 4, 6, 10):
            monotone &= coverage_fraction(vis, small, M) <= coverage_fraction(vis, big, M)
            monotone &= coverage_fraction(vis, big, M + 1) <= coverage_fraction(vis, big, M)
    order_ok = 0
    for k in range(20):
        X = rng.uniform(-3, 3, size=(int(rng.integers(2, 11)), 3))
        order_ok += farthest_point_order(X) == greedy_farthest_removal(X)
    ok = full >= 0.80 and monotone and order_ok == 20
    report(4, "coverage", ok, f"cov(48 cams, M=4) = {full:.3f}; monotone {monotone}; "
                              f"farthest-point order matches brute force {order_ok}/20")


def test_c05_safety_ordering():
    order, dyn_ok, clean = 0, 0, True
    for seed in range(20):
        sc = SimScenario(seed=seed)
        na, s05, s20, dyn = (simulate(sc.with_policy(p)) for p in table_policies()[:4])
        h = [na.human_hits, s05.human_hits, s20.human_hits]
        c = [na.avg_cycle_s, s05.avg_cycle_s, s20.avg_cycle_s]
        order += h[0] >= h[1] >= h[2] and c[0] <= c[1] <= c[2]
        dyn_ok += dyn.human_hits <= s05.human_hits and dyn.avg_cycle_s <= s05.avg_cycle_s
        clean &= na.triggers == 0 and na.fallback_s == 0
    ok = order == 20 and dyn_ok >= 16 and clean
    report(5, "safety ordering", ok, f"ordering {order}/20; dynamic beats static 0.5 on {dyn_ok}/20; "
                                     f"non_aware triggers/fallback zero {clean}")


def _hits_after(log, t0):
    return sum(1 for e in log if e["event"] == "hit" and e["t"] >= t0)


def test_c06_behavior_learning():
    fewer, both, d_cycle, l_cycle = 0, 0, [], []
    for seed in range(20):
        sc = learning_scenario(seed)
        ld, ll = [], []
        d = simulate(sc.with_policy(PolicyConfig("dynamic")), ld)
        lrn = simulate(sc.with_policy(PolicyConfig("dynamic_learned")), ll)
        warm = lrn.warmup_s if lrn.warmup_s is not None else 0.0
        strictly = _hits_after(ll, warm) < _hits_after(ld, warm)
        fewer += strictly
        both += strictly and abs(lrn.avg_cycle_s - d.avg_cycle_s) < 0.01 * d.avg_cycle_s
        d_cycle.append(d.avg_cycle_s)
        l_cycle.append(lrn.avg_cycle_s)
    delta = abs(np.mean(l_cycle) - np.mean(d_cycle)) / np.mean(d_cycle)

    sc = SimScenario(policy=PolicyConfig("dynamic_learned"), seed=2, n_items=16,
                     human={"pattern": "adversarial", "duration": 400.0})
    (_, h0, c0), (_, h1, c1) = memory_freeze_sweep(sc, [0.0, 1.0])
    dyn, full = simulate(sc.with_policy(PolicyConfig("dynamic"))), simulate(sc)
    exact = (h0, c0) == (dyn.human_hits, dyn.avg_cycle_s) and (h1, c1) == (full.human_hits, full.avg_cycle_s)
    # cycle delta judged on the mean over seeds; the per-seed count is shown for reference
    ok = fewer >= 16 and delta < 0.01 and exact
    report(6, "behavior learning", ok, f"fewer hits after warmup {fewer}/20; mean cycle delta {100 * delta:.2f} %; "
                                       f"per-seed fewer-and-within-1% {both}/20; freeze endpoints exact {exact}")


def test_c07_cbf():
    r = simulate_cbf(CbfScenario())
    rng = np.random.default_rng(7)
    exact = True
    for _ in range(1000):
        ref = rng.normal(size=7)
        J = rng.normal(size=(3, 7))
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        h = rng.uniform(0.01, 1.0)
        out, _ = qp_cbf_step(ref, J, n, h)
        if (J @ ref) @ n >= -ALPHA * h:
            exact &= out is ref
    ok = r["h"].min() >= -1e-6 and exact
    report(7, "QP/CBF", ok, f"min h at checks {r['h'].min():.4f}; {r['inactive_steps']} inactive steps; "
                            f"slack-constraint outputs bit-exact {exact}")


def test_c08_placement():
    t0 = time.perf_counter()
    rows = {k: r for k, r, _ in sweep(seed=42, predictor=get_predictor("lookup"))}
    elapsed = time.perf_counter() - t0
    table = {0: 50.0, 3: 62.5, 6: 75.0, 9: 87.5, 12: 100.0}
    worst = max(abs(100 * rows[k] - v) for k, v in table.items())
    oracle = max(abs(rows[k] - expected_lookup_accuracy(k)) for k in rows)
    ok = worst <= 2.0 and oracle <= 0.02 and elapsed < 1.0
    report(8, "placement", ok, " / ".join(f"{100 * rows[k]:.1f}" for k in table)
           + f"; max oracle gap {100 * oracle:.2f} pp; {1000 * elapsed:.0f} ms")


def test_c09_contact():
    checks = [shift_torque_to_ee(Wrench((0, 0, -10), (0, 0, 0)), (0.1, 0, 0)).tolist() == [0.0, -1.0, 0.0]]
    s = EmaState()
    seq = [ema_wrench(s, Wrench((10, 0, 0)), Wrench(), 0.2).force[0] for _ in range(3)]
    checks.append(np.allclose(seq, [2.0, 3.6, 4.88], rtol=0, atol=1e-12))
    checks.append(admittance_velocity(5.0, 0.0, 0.01, 1.0, 3.0) == -0.02)
    checks.append(admittance_velocity(-5.0, 0.0, 0.01, 1.0, 3.0) == 0.02)
    checks.append(rate_limit([1.0], [0.0], 1.0, 0.001).tolist() == [0.001])
    v, n = np.array([0.0]), 0
    while v[0] != 0.5 and n < 10_000:
        v, n = rate_limit([0.5], v, 1.0, 0.01), n + 1
    checks.append(v[0] == 0.5 and n == 50)
    report(9, "contact kernels", all(checks), f"{sum(checks)}/{len(checks)} worked examples exact")


def _run_twice(tmp_path, name, argv_for):
    outs = []
    for i in range(2):
        d = tmp_path / f"{name}{i}"
        d.mkdir()
        assert run(argv_for(d)) == 0
        outs.append(sorted((p.name, p.read_bytes()) for p in d.iterdir()))
    return outs[0] == outs[1]


def test_c10_determinism(tmp_path):
    sc = tmp_path / "sc.json"
    sc.write_text(json.dumps({"n_items": 3, "human": {"pattern": "adversarial", "duration": 120.0}}))
    rig, cloud = tmp_path / "rig.json", tmp_path / "cloud.csv"
    run(["gen", "rig", "--out", str(rig)])
    run(["gen", "cloud", "--spacing", "0.1", "--out", str(cloud)])
    same = {
        "simulate": _run_twice(tmp_path, "sim", lambda d: [
            "simulate", "--scenario", str(sc), "--policy", "table", "--seed", "3",
            "--out", str(d / "m.csv"), "--log", str(d / "e.jsonl")]),
        "coverage": _run_twice(tmp_path, "cov", lambda d: [
            "coverage", "--calib", str(rig), "--cloud", str(cloud), "--counts", "12,24,48", "--resolution", "0.1",
            "--subsets", "5", "--seed", "9", "--out", str(d / "c.csv")]),
        "placement": _run_twice(tmp_path, "pl", lambda d: [
            "placement", "sweep", "--sampled", "--oracle", "--out", str(d / "p.csv")]),
        "gen": _run_twice(tmp_path, "gen", lambda d: [
            "gen", "reports", "--seed", "11", "--frames", "5", "--out", str(d / "r.jsonl"),
            "--calib-out", str(d / "c.json"), "--truth", str(d / "t.json")]),
    }
    ok = all(same.values())
    report(10, "determinism", ok, ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
