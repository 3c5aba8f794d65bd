import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omnikit.errors import DomainError, EmptyCandidateSet, NoFeasibleCandidate, NoSolution
from omnikit.geometry import RigidPose, rot_z
from omnikit.handover import (
    HandoverConfig, Weights, ik_solve, manipulability, planar_two_link, plan_handover, prehandover, receiver_pose,
    sample_candidate_positions, score_candidate, seven_axis_arm, tcp_score,
)
from omnikit.handover.kinematics import POS_TOL, ROT_TOL
from omnikit.handover.planner import R_ELONGATED, R_SPHERICAL, in_annulus, nominal_center
from conftest import random_rotation


def _bases(dist, yaw_r=np.pi):
    return RigidPose(np.eye(3), [0, 0, 0]), RigidPose(rot_z(yaw_r), [dist, 0, 0])


def _angle(Ra, Rb):
    return np.arccos(np.clip((np.trace(Ra.T @ Rb) - 1) / 2, -1, 1))


def test_nominal_center_and_midpoint_retained():
    g, r = _bases(1.0)
    c = nominal_center(g, r)
    assert c.tolist() == pytest.approx([0.5, 0.0, 0.45])
    pts = sample_candidate_positions(g, r)
    assert np.any(np.all(np.isclose(pts, c), axis=1))
    assert all(in_annulus(p, g) and in_annulus(p, r) for p in pts)


def test_center_height_floor():
    g = RigidPose(np.eye(3), [0, 0, -0.3])
    r = RigidPose(np.eye(3), [1, 0, -0.3])
    assert nominal_center(g, r)[2] == pytest.approx(0.4)


@pytest.mark.parametrize("dist", [1.6, 0.6])
def test_midpoint_rejected_outside_annulus(dist):
    g, r = _bases(dist)
    c = nominal_center(g, r)
    assert not in_annulus(c, g)
    try:
        pts = sample_candidate_positions(g, r)
    except EmptyCandidateSet:
        return
    assert not np.any(np.all(np.isclose(pts, c), axis=1))


@pytest.mark.parametrize("pitch", [0.05, 0.07, 0.15])
def test_candidate_grid_stays_in_box(pitch):
    g, r = _bases(1.0)
    off = sample_candidate_positions(g, r, pitch=pitch) - nominal_center(g, r)
    assert np.all(np.abs(off[:, :2]) <= 0.15 + 1e-12) and np.all(np.abs(off[:, 2]) <= 0.10 + 1e-12)
    # 0.05 pitch: 7 x 7 x 5 box before the annulus filter
    if pitch == 0.05:
        assert len(off) <= 245


def test_candidate_errors():
    g, r = _bases(3.0)
    with pytest.raises(EmptyCandidateSet):
        sample_candidate_positions(g, r)
    with pytest.raises(ValueError):
        sample_candidate_positions(g, g)


def test_receiver_pose_examples():
    giver = RigidPose(np.eye(3), [0, 0, 0])
    sph = receiver_pose(giver, "spherical")
    assert sph.translation.tolist() == pytest.approx([0.03, 0, 0.01])
    assert sph.rotation.tolist() == [[0, 1, 0], [1, 0, 0], [0, 0, -1]]
    el = receiver_pose(giver, "elongated")
    assert el.translation.tolist() == pytest.approx([0.06, 0, 0])
    assert el.rotation.tolist() == np.diag([-1.0, 1.0, -1.0]).tolist()
    with pytest.raises(ValueError):
        receiver_pose(giver, "cube")


def test_category_matrices_orthonormal():
    for R in (R_SPHERICAL, R_ELONGATED):
        assert np.array_equal(R.T @ R, np.eye(3))


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.sampled_from(["spherical", "elongated"]))
def test_receiver_pose_covariant(seed, category):
    rng = np.random.default_rng(seed)
    G = random_rotation(rng)
    p = rng.normal(size=3)
    base = receiver_pose(RigidPose(np.eye(3), np.zeros(3)), category)
    moved = receiver_pose(RigidPose(G, p), category)
    assert np.allclose(moved.translation - p, G @ base.translation, atol=1e-12)
    assert np.allclose(moved.rotation, G @ base.rotation, atol=1e-12)
    # the matching score is frame independent
    assert tcp_score(G, moved.rotation, category) == pytest.approx(1.0)


def test_tcp_score_examples():
    I = np.eye(3)
    assert tcp_score(I, R_SPHERICAL, "spherical") == pytest.approx(1.0)
    assert tcp_score(I, I, "spherical") == pytest.approx(0.0)
    assert tcp_score(I, R_ELONGATED, "elongated") == pytest.approx(1.0)


def test_ik_round_trip(rng):
    chain = seven_axis_arm()
    for _ in range(5):
        q0 = rng.uniform(chain.lower + 0.2, chain.upper - 0.2)
        target = chain.fk(q0)
        q = ik_solve(chain, target, restarts=8, seed=3)
        T = chain.fk(q)
        assert np.all(q >= chain.lower) and np.all(q <= chain.upper)
        assert np.linalg.norm(T.translation - target.translation) < POS_TOL
        assert _angle(T.rotation, target.rotation) < ROT_TOL


def test_ik_unreachable_and_nonfinite():
    chain = planar_two_link()
    with pytest.raises(NoSolution):
        ik_solve(chain, RigidPose(np.eye(3), [10.0, 0, 0]))
    with pytest.raises(ValueError):
        ik_solve(chain, RigidPose(np.eye(3), [np.nan, 0, 0]))


def test_two_link_elbow_matches_closed_form():
    chain = planar_two_link()
    d = 0.8
    target = RigidPose(np.eye(3), [d * np.cos(0.3), d * np.sin(0.3), 0.0])
    q = ik_solve(chain, target)
    # law of cosines for the elbow, independent of the shoulder
    elbow = np.arccos((d**2 - 0.25 - 0.25) / (2 * 0.5 * 0.5))
    assert abs(q[1]) == pytest.approx(elbow, abs=1e-6)
    assert elbow == pytest.approx(np.arccos((0.64 - 0.5) / 0.5))


def test_score_sum_and_tcp_monotone():
    w = Weights()
    ones = dict(c=1, w=1, m=1, s_tcp=1, z_down=1)
    assert score_candidate(ones, w) == pytest.approx(w.c + w.w + w.m + w.tcp + w.z)
    lo = dict(ones, s_tcp=0.3)
    for weights in (w, Weights(0.9, 0.9, 0.9, 0.01, 0.9)):
        assert score_candidate(ones, weights) > score_candidate(lo, weights)


def test_manipulability_mid_beats_straight():
    chain = planar_two_link()
    mid = manipulability(chain, [0.0, np.pi / 2])
    straight = manipulability(chain, [0.0, 0.05])
    # planar 2-link: sqrt(det JJ^T) = l1 l2 |sin q2|
    assert mid == pytest.approx(0.25)
    assert straight == pytest.approx(0.25 * np.sin(0.05))
    assert mid > straight


@pytest.mark.parametrize("category,delta", [("spherical", 0.05), ("elongated", 0.08)])
def test_prehandover_retract(category, delta):
    chain = seven_axis_arm()
    q_h = chain.home + np.array([0.2, 0.3, 0.0, 0.4, 0.0, 0.1, 0.0])
    q_pre = prehandover(q_h, chain, category)
    Th, Tp = chain.fk(q_h), chain.fk(q_pre)
    assert np.linalg.norm(Tp.translation - Th.translation) == pytest.approx(delta, abs=POS_TOL)
    assert _angle(Th.rotation, Tp.rotation) < ROT_TOL
    # retraction is backwards along the approach axis
    assert (Tp.translation - Th.translation) @ Th.rotation[:, 2] < 0


SMALL = HandoverConfig(pitch=0.15, n_theta=4, n_phi=2)


@pytest.fixture(scope="module")
def planned():
    g, r = _bases(1.0)
    arm = seven_axis_arm()
    return plan_handover(g, r, (arm, arm), "spherical", SMALL, seed=0)


def test_plan_handover_small_grid(planned):
    g, r = _bases(1.0)
    assert planned.scores["s_tcp"] > 0.95
    assert in_annulus(planned.giver.translation, g) and in_annulus(planned.giver.translation, r)
    assert in_annulus(planned.receiver.translation, g) and in_annulus(planned.receiver.translation, r)
    assert all(0.0 <= v <= 1.0 for v in planned.scores.values())
    assert planned.total == pytest.approx(score_candidate(planned.scores, SMALL.weights))
    arm_g, arm_r = seven_axis_arm().with_base(g), seven_axis_arm().with_base(r)
    for chain, q, pose in ((arm_g, planned.q_g, planned.giver), (arm_r, planned.q_r, planned.receiver)):
        assert np.all(q >= chain.lower) and np.all(q <= chain.upper)
        assert np.linalg.norm(chain.fk(q).translation - pose.translation) < POS_TOL
    assert planned.q_pre_g is not None and planned.q_pre_r is not None


def test_plan_handover_deterministic(planned):
    g, r = _bases(1.0)
    arm = seven_axis_arm()
    again = plan_handover(g, r, (arm, arm), "spherical", SMALL, seed=0)
    assert again.to_dict() == planned.to_dict()


def test_plan_handover_far_bases():
    g, r = _bases(3.0)
    arm = seven_axis_arm()
    with pytest.raises(NoFeasibleCandidate):
        plan_handover(g, r, (arm, arm), "spherical", SMALL)
    assert issubclass(NoFeasibleCandidate, DomainError)
