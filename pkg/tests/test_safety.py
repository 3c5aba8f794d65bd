import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omnikit.errors import BadRecording, ConfigError, NoValidJoints, SchemaError
from omnikit.safety import (
    BehaviorMemory, CbfScenario, MemoryConfig, PolicyConfig, SimScenario, SkeletonRecording, VelocityEstimator,
    bearing_bin, dynamic_region, effective_velocity, generate_human, interpolate, load_recording, load_scenario,
    memory_freeze_sweep, modulated_radius, qp_cbf_step, save_recording, save_scenario, simulate, simulate_cbf,
    static_trigger, update_behavior_memory,
)
from omnikit.safety.geometry import (
    HumanCylinder, TcpSphere, human_center, point_cylinder_distance, sphere_cylinder_distance,
)
from omnikit.tracking.skeleton import N_JOINTS


def cylinder_oracle(p, c, r=0.3, H=1.8):
    rho = math.hypot(p[0] - c[0], p[1] - c[1])
    dz = abs(p[2] - c[2])
    out_r, out_z = max(rho - r, 0.0), max(dz - H / 2, 0.0)
    if out_r > 0 or out_z > 0:
        return math.hypot(out_r, out_z)
    return -min(r - rho, H / 2 - dz)


# ------------------------------------------------------------ geometry

def test_human_center_examples():
    J = np.zeros((N_JOINTS, 3))
    J[:] = (1.0, 2.0, 3.0)
    assert human_center(J).tolist() == [1.0, 2.0, 3.0]
    J = np.zeros((N_JOINTS, 3))
    J[1] = (2.0, 0, 0)
    J[30] = (100.0, 0, 0)
    valid = np.zeros(N_JOINTS, bool)
    valid[[0, 1, 30]] = True
    assert human_center(J, valid).tolist() == [1.0, 0.0, 0.0]
    with pytest.raises(NoValidJoints):
        human_center(J, np.zeros(N_JOINTS, bool))


def test_sphere_cylinder_examples():
    hum = HumanCylinder((0.0, 0.0, 0.9))
    assert sphere_cylinder_distance(TcpSphere((1.0, 0.0, 0.9)), hum) == pytest.approx(0.62)
    assert sphere_cylinder_distance(TcpSphere((0.0, 0.0, 0.9)), hum) == pytest.approx(-0.38)
    assert sphere_cylinder_distance(TcpSphere((0.0, 0.0, 1.8 + 0.5)), hum) == pytest.approx(0.42)
    with pytest.raises(ValueError):
        TcpSphere((0, 0, 0), radius=0.0)


pt = st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 3))


@given(pt)
def test_point_cylinder_matches_oracle(p):
    assert point_cylinder_distance(p, (0.1, -0.2, 0.9)) == pytest.approx(cylinder_oracle(p, (0.1, -0.2, 0.9)),
                                                                         abs=1e-12)


# ------------------------------------------------------------ policies

def test_static_trigger_example():
    assert static_trigger((0.4, 0.0, 1.0), [(0.0, 0.0, 0.5)], 0.5, 2.0)
    assert not static_trigger((0.6, 0.0, 1.0), [(0.0, 0.0, 0.5)], 0.5, 2.0)
    assert not static_trigger((0.1, 0.0, 2.0), [(0.0, 0.0, 0.5)], 0.5, 2.0)


def test_dynamic_region_examples():
    C = (0.0, 0.0)
    hit, center, R = dynamic_region((0.55, 0.0), C, 0.0, 0.6, 0.6, 0.3, 0.6)
    assert hit and center == (0.0, 0.0) and R == 0.6
    assert not dynamic_region((0.65, 0.0), C, 0.0, 0.6, 0.6, 0.3, 0.6)[0]


def test_dynamic_region_shift_keeps_far_edge():
    # receding human shrinks the radius; growth is capped at r_max so the center only shifts when r_max > r_base
    _, center, R = dynamic_region((2.0, 0.0), (0.0, 0.0), 0.5, 0.4, 0.6, 0.3, 0.8)
    assert R == pytest.approx(0.7) and center[0] == pytest.approx(0.3)
    # far edge on the opposite side stays at -r_base
    assert center[0] - R == pytest.approx(-0.4)


def test_policy_validation():
    with pytest.raises(ConfigError):
        PolicyConfig("dynamic", r_base=0.7, r_max=0.6)
    with pytest.raises(ConfigError):
        PolicyConfig("teleport")


# ------------------------------------------------------------ behavior memory

def _episode(memory, bearing_deg, min_dist, t0=0.0):
    C = (0.0, 0.0)
    a = math.radians(bearing_deg)
    update_behavior_memory(memory, (1.5 * math.cos(a), 1.5 * math.sin(a)), C, min_dist, t0)
    return update_behavior_memory(memory, (5 * math.cos(a), 5 * math.sin(a)), C, min_dist, t0 + 1.0)[1]


def test_episode_intrusion_bins():
    m = BehaviorMemory()
    assert _episode(m, 15.0, 0.25) == (0, True, 1.0)
    assert np.flatnonzero(m.n_intr).tolist() == [0, 1, 11] and m.n_pass.sum() == 0
    m = BehaviorMemory()
    _episode(m, 15.0, 0.5)
    assert np.flatnonzero(m.n_pass).tolist() == [0, 1, 11] and m.n_intr.sum() == 0


def test_episode_hysteresis_and_timeout():
    m = BehaviorMemory()
    C = (0.0, 0.0)
    update_behavior_memory(m, (1.9, 0.0), C, 1.0, 0.0)
    assert m.inside
    assert update_behavior_memory(m, (2.3, 0.0), C, 1.0, 1.0)[1] is None      # inside 1.2 x 2.0
    assert update_behavior_memory(m, (1.0, 0.0), C, 1.0, 29.9)[1] is None
    assert update_behavior_memory(m, (1.0, 0.0), C, 1.0, 30.0)[1] == (0, False, 30.0)


def test_decay_every_twenty_episodes():
    m = BehaviorMemory()
    for i in range(19):
        _episode(m, 100.0, 0.1, 10.0 * i)
    assert m.n_intr[3] == 19.0
    _episode(m, 100.0, 0.1, 500.0)
    assert m.n_intr[3] == pytest.approx(20 * 0.95)


def test_bearing_bins():
    assert bearing_bin(math.radians(15)) == 0
    assert bearing_bin(math.radians(30)) == 1
    assert bearing_bin(math.radians(-15)) == 11


def test_modulated_radius_examples():
    m = BehaviorMemory()
    assert modulated_radius(m, 0.1, 0.6) == 0.6
    for i in range(3):
        _episode(m, 15.0, 0.1, 10.0 * i)
    assert modulated_radius(m, math.radians(15), 0.6) == pytest.approx(1.08)
    m2 = BehaviorMemory()
    for i in range(3):
        _episode(m2, 15.0, 0.9, 10.0 * i)
    assert modulated_radius(m2, math.radians(15), 0.6) == 0.6


@settings(max_examples=30)
@given(st.lists(st.tuples(st.floats(0, 359), st.floats(0, 1)), min_size=0, max_size=30), st.floats(0, 6.28))
def test_modulated_radius_bounds(episodes, theta):
    m = BehaviorMemory()
    for i, (b, d) in enumerate(episodes):
        _episode(m, b, d, 10.0 * i)
    r = modulated_radius(m, theta, 0.5)
    assert 0.5 <= r <= 0.5 * 1.8 + 1e-12


# ------------------------------------------------------------ velocity

def test_effective_velocity_constant():
    t = np.arange(20) * 0.02
    P = np.stack([1.0 - 0.7 * t, 0.5 + 0.0 * t], 1)
    assert effective_velocity(t, P) == pytest.approx(0.7, abs=1e-12)


def test_effective_velocity_decelerating_uses_ema():
    t = np.arange(20) * 0.02          # speed falls from 1.5 to 0.36 m/s without reversing
    P = np.stack([2.0 - 1.5 * t + 1.5 * t ** 2, 0 * t], 1)
    est = VelocityEstimator()
    est.update(P[0], 1.0)
    for p in P[1:]:
        est.update(p, 0.02)
    assert effective_velocity(t, P) == pytest.approx(math.hypot(*est.ema), abs=1e-12)


def test_effective_velocity_curved_golden():
    t = np.arange(0, 1.0, 0.02)
    P = np.stack([2 - 0.5 * t - 0.8 * t ** 2, 0.3 * np.sin(2 * t)], 1)
    # frozen from the first implementation; the extrapolated term dominates here
    assert effective_velocity(t, P) == pytest.approx(2.3012495260554706, rel=1e-12)


# ------------------------------------------------------------ CBF

def test_cbf_inactive_returns_reference_object():
    ref = np.array([0.3, -0.1])
    out, bad = qp_cbf_step(ref, np.eye(2), (1.0, 0.0), 0.2)
    assert out is ref and not bad


def test_cbf_two_joint_kkt():
    # J = [[1, 1], [0, 1]] (planar), n = (1, 0), h = 0; qd_ref gives J qd . n = -1
    J = np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
    ref = np.array([-0.5, -0.5])
    out, _ = qp_cbf_step(ref, J, (1.0, 0.0, 0.0), 0.0)
    # a = J^T n = (1, 1); correction = (0 - (-1)) / 2 * a
    assert out.tolist() == [0.0, 0.0]
    assert (J @ out)[0] == 0.0


def test_cbf_margin_bound():
    out, _ = qp_cbf_step(np.array([-1.0, 0.0, 0.0]), np.eye(3), (1.0, 0.0, 0.0), 0.05, alpha=2.0)
    assert out[0] == pytest.approx(-0.1)


def test_cbf_infeasible_flag():
    out, bad = qp_cbf_step(np.array([1.0, 0.0]), np.zeros((3, 2)), (1.0, 0.0, 0.0), -0.1)
    assert bad and out.tolist() == [0.0, 0.0]


def test_cbf_scenario_stays_safe():
    r = simulate_cbf(CbfScenario())
    assert r["h"].min() >= -1e-6
    assert r["inactive_steps"] < 8000        # the constraint does bind
    assert np.allclose(r["final"], CbfScenario().goal)


# ------------------------------------------------------------ recordings

def test_interpolation_exact_at_frames():
    rec = generate_human(3, duration=10.0)
    J, V = interpolate(rec, rec.times)
    assert np.array_equal(J, rec.joints) and np.array_equal(V, rec.valid)


def test_interpolation_midpoint():
    rec = generate_human(3, duration=5.0)
    mid = 0.5 * (rec.times[4] + rec.times[5])
    J, _ = interpolate(rec, [mid])
    assert np.allclose(J[0], 0.5 * (rec.joints[4] + rec.joints[5]), atol=1e-12)


@pytest.mark.parametrize("ext", [".csv", ".jsonl"])
def test_recording_round_trip(tmp_path, ext):
    rec = generate_human(1, duration=3.0)
    p = tmp_path / f"h{ext}"
    save_recording(p, rec)
    back = load_recording(p)
    assert np.array_equal(back.times, rec.times) and np.array_equal(back.joints, rec.joints)
    assert np.array_equal(back.valid, rec.valid)


def test_bad_recording():
    with pytest.raises(BadRecording):
        SkeletonRecording(np.arange(3.0), np.zeros((3, 17, 3)), np.ones((3, 17), bool))
    with pytest.raises(BadRecording):
        SkeletonRecording(np.array([0.0, 0.0]), np.zeros((2, N_JOINTS, 3)), np.ones((2, N_JOINTS), bool))


# ------------------------------------------------------------ simulator

def _parked(tmp_path, xy):
    J = np.zeros((2, N_JOINTS, 3))
    J[:, :, :2] = xy
    J[:, :, 2] = 0.9
    p = tmp_path / "parked.jsonl"
    save_recording(p, SkeletonRecording(np.array([21.0, 21.0 + 1 / 30]), J, np.ones((2, N_JOINTS), bool)))
    return str(p)


def test_far_human_non_aware_clean(tmp_path):
    sc = SimScenario(recording=_parked(tmp_path, (0.0, 8.0)), n_items=2)
    m = simulate(sc)
    assert (m.human_hits, m.triggers, m.fallback_s, m.completed) == (0, 0, 0.0, True)


def test_parked_human_ordering(tmp_path):
    sc = SimScenario(recording=_parked(tmp_path, (0.0, 0.3)), n_items=2, trial_duration=60.0)
    na = simulate(sc)
    st2 = simulate(sc.with_policy(PolicyConfig("static", r=2.0)))
    assert na.human_hits > 0
    assert st2.human_hits == 0 and st2.avg_cycle_s > na.avg_cycle_s
    assert st2.triggers >= 1 and st2.fallback_s > 0


def test_simulate_deterministic():
    sc = SimScenario(seed=4, policy=PolicyConfig("dynamic"), n_items=3)
    la, lb = [], []
    a, b = simulate(sc, la), simulate(sc, lb)
    assert a == b and la == lb


def test_freeze_sweep_endpoints():
    sc = SimScenario(policy=PolicyConfig("dynamic_learned"), seed=2, n_items=16,
                     human={"pattern": "adversarial", "duration": 400.0})
    (f0, h0, c0), (f1, h1, c1) = memory_freeze_sweep(sc, [0.0, 1.0])
    dyn = simulate(sc.with_policy(PolicyConfig("dynamic")))
    full = simulate(sc)
    assert (h0, c0) == (dyn.human_hits, dyn.avg_cycle_s)
    assert (h1, c1) == (full.human_hits, full.avg_cycle_s)
    with pytest.raises(ConfigError):
        memory_freeze_sweep(sc.with_policy(PolicyConfig("dynamic")), [0.5])


def test_scenario_round_trip(tmp_path):
    sc = SimScenario(policy=PolicyConfig("static", r=2.0), seed=9, n_items=5, freeze_at=12.0)
    save_scenario(tmp_path / "s.json", sc)
    assert load_scenario(tmp_path / "s.json") == sc


def test_scenario_schema_errors():
    with pytest.raises(SchemaError):
        SimScenario.from_dict({"speed_of_light": 1})
    with pytest.raises(ConfigError):
        SimScenario.from_dict({"n_items": 0})
