import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from omnikit.errors import BehindCamera
from omnikit.geometry import (
    CameraModel, RigidPose, compose, distort_normalized, exp_so3, frustum_mask, log_so3, look_at, pose_error, project,
    project_points, rotation_angle, undistort,
)
from omnikit.fileio import camera_from_dict, camera_to_dict

rotvec = st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) < 3.1)
trans = st.lists(st.floats(-5, 5), min_size=3, max_size=3)


@given(rotvec)
def test_exp_matches_scipy(w):
    assert np.allclose(exp_so3(w), Rotation.from_rotvec(w).as_matrix(), atol=1e-12)


@given(rotvec)
def test_log_inverts_exp(w):
    assert np.allclose(log_so3(exp_so3(w)), w, atol=1e-8)


def test_log_near_pi():
    w = np.array([0.0, math.pi - 1e-9, 0.0])
    assert rotation_angle(exp_so3(w)) == pytest.approx(math.pi - 1e-9, abs=1e-7)
    assert np.allclose(np.abs(log_so3(exp_so3([0, 0, math.pi]))), [0, 0, math.pi], atol=1e-9)


@given(rotvec, trans, rotvec, trans)
def test_compose_matches_matrices(w1, t1, w2, t2):
    a, b = RigidPose.from_rotvec(w1, t1), RigidPose.from_rotvec(w2, t2)
    assert np.allclose(compose(a, b).matrix(), a.matrix() @ b.matrix(), atol=1e-9)
    assert np.allclose((a @ a.inverse()).matrix(), np.eye(4), atol=1e-9)


@given(rotvec, trans)
def test_pose_error_zero_on_self(w, t):
    p = RigidPose.from_rotvec(w, t)
    dt, dr = pose_error(p, p)
    assert dt == 0.0 and dr < 1e-7


def _cam(dist=(0, 0, 0, 0, 0)):
    return CameraModel.from_extrinsic(look_at((3, 0, 1.5), (0, 0, 1)), fx=1000, fy=1000, cx=1024, cy=768, dist=dist)


def test_projection_hand_computed():
    cam = CameraModel(fx=800, fy=800, cx=640, cy=480, width=1280, height=960)
    # camera at origin looking down +z: u = f x / z + cx
    assert project(cam, (0.5, -0.25, 2.0)).tolist() == [840.0, 380.0]
    with pytest.raises(BehindCamera):
        project(cam, (0, 0, -1))
    uv, z = project_points(cam, [[0, 0, -1], [0, 0, 1]])
    assert np.isnan(uv[0]).all() and uv[1].tolist() == [640.0, 480.0]


def test_look_at_points_optical_axis_at_target():
    cam = _cam()
    assert np.allclose(project(cam, (0, 0, 1)), [1024, 768], atol=1e-9)


@given(st.floats(-0.4, 0.4), st.floats(-0.3, 0.3))
def test_undistort_inverts_distort(x, y):
    cam = _cam((-0.1, 0.02, 0.001, -0.0005, 0.0))
    d = distort_normalized(np.array([x, y]), cam.dist)
    px = np.array([cam.fx * d[0] + cam.cx, cam.fy * d[1] + cam.cy])
    ideal = np.array([cam.fx * x + cam.cx, cam.fy * y + cam.cy])
    assert np.allclose(undistort(cam, px), ideal, atol=1e-6)


def test_frustum_depth_band():
    cam = CameraModel(fx=800, fy=800, cx=640, cy=480, width=1280, height=960)
    m = frustum_mask(cam, [[0, 0, 0.2], [0, 0, 3], [0, 0, 9], [10, 0, 3]], 0.3, 8.0)
    assert m.tolist() == [False, True, False, False]
    with pytest.raises(ValueError):
        frustum_mask(cam, [[0, 0, 1]], 2, 1)


def test_camera_dict_round_trip_bit_exact():
    cam = _cam((-0.1, 0.02, 0.001, -0.0005, 0.0))
    back = camera_from_dict(camera_to_dict(cam))
    assert np.array_equal(back.cam_to_world.matrix(), cam.cam_to_world.matrix())
    assert back.dist == cam.dist and back.fx == cam.fx


def test_camera_rejects_bad_intrinsics():
    with pytest.raises(ValueError):
        CameraModel(fx=-1, fy=1, cx=1, cy=1)
    with pytest.raises(ValueError):
        CameraModel(fx=1, fy=1, cx=5000, cy=1)
