"""Rigid-body math, pinhole projection with radial-tangential distortion, frustum tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BehindCamera, NoConvergence

Z_EPS = 1e-9
UNDISTORT_MAX_ITERS = 50
UNDISTORT_TOL = 1e-10


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_so3(omega):
    """Rodrigues' formula: axis-angle vector to rotation matrix."""
    omega = np.asarray(omega, dtype=float)
    theta = float(np.linalg.norm(omega))
    K = skew(omega)
    if theta < 1e-8:
        # second-order series keeps orthonormality to ~1e-16 for tiny angles
        return np.eye(3) + K + 0.5 * K @ K
    return np.eye(3) + (np.sin(theta) / theta) * K + ((1.0 - np.cos(theta)) / theta**2) * (K @ K)


def log_so3(R):
    """Rotation matrix to axis-angle vector, robust near 0 and pi."""
    R = np.asarray(R, dtype=float)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    theta = float(np.arctan2(0.5 * np.linalg.norm(w), (np.trace(R) - 1.0) / 2.0))
    if theta < 1e-6:
        return 0.5 * w
    if np.pi - theta < 1e-4:
        # near pi the antisymmetric part vanishes; read the axis off R + I
        B = 0.5 * (R + np.eye(3))
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / np.sqrt(max(B[k, k], 1e-300))
        axis /= np.linalg.norm(axis)
        if axis @ w < 0:
            axis = -axis
        return theta * axis
    return theta / (2.0 * np.sin(theta)) * w


def log_so3_batch(R):
    """Vectorized log_so3 for (N, 3, 3) stacks."""
    R = np.asarray(R, dtype=float)
    w = np.stack([R[:, 2, 1] - R[:, 1, 2], R[:, 0, 2] - R[:, 2, 0], R[:, 1, 0] - R[:, 0, 1]], axis=1)
    s = 0.5 * np.linalg.norm(w, axis=1)
    theta = np.arctan2(s, (np.trace(R, axis1=1, axis2=2) - 1.0) / 2.0)
    small = theta < 1e-6
    scale = np.where(small, 0.5, theta / (2.0 * np.where(small, 1.0, np.sin(theta))))
    out = scale[:, None] * w
    for i in np.nonzero(np.pi - theta < 1e-4)[0]:
        out[i] = log_so3(R[i])
    return out


def rotation_angle(R) -> float:
    R = np.asarray(R, dtype=float)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return float(np.arctan2(0.5 * np.linalg.norm(w), (np.trace(R) - 1.0) / 2.0))


def quat_from_matrix(R):
    """Unit quaternion (w, x, y, z) with w >= 0."""
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0:
        s = 2.0 * np.sqrt(t + 1.0)
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 2.0 * np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k])
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    q /= np.linalg.norm(q)
    return q if q[0] >= 0 else -q


def matrix_from_quat(q):
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def project_to_so3(M):
    U, _, Vt = np.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class RigidPose:
    """Element of SE(3). Acts on points as ``R @ p + t``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> RigidPose:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, M) -> RigidPose:
        M = np.asarray(M, dtype=float).reshape(4, 4)
        return cls(M[:3, :3], M[:3, 3])

    @classmethod
    def from_rotvec(cls, omega, t=(0.0, 0.0, 0.0)) -> RigidPose:
        return cls(exp_so3(omega), t)

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def inverse(self) -> RigidPose:
        Rt = self.rotation.T
        return RigidPose(Rt, -Rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def __matmul__(self, other: RigidPose) -> RigidPose:
        return compose(self, other)

    def is_valid(self, tol: float = 1e-9) -> bool:
        R = self.rotation
        return bool(
            np.allclose(R @ R.T, np.eye(3), atol=tol)
            and abs(np.linalg.det(R) - 1.0) <= tol
            and np.all(np.isfinite(self.translation))
        )

    def __repr__(self):
        return f"RigidPose(rotvec={np.round(log_so3(self.rotation), 6).tolist()}, t={np.round(self.translation, 6).tolist()})"


def compose(a: RigidPose, b: RigidPose) -> RigidPose:
    """Pose that applies ``b`` first, then ``a``."""
    return RigidPose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(p: RigidPose) -> RigidPose:
    return p.inverse()


def pose_error(a: RigidPose, b: RigidPose) -> tuple[float, float]:
    """(translation distance in m, rotation angle in rad) between two poses."""
    dt = float(np.linalg.norm(a.translation - b.translation))
    dr = rotation_angle(a.rotation.T @ b.rotation)
    return dt, dr


# --------------------------------------------------------------------------- camera


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole camera with 5-coefficient radial-tangential distortion.

    The extrinsic is stored camera-to-world (the calibration file convention) so
    file round trips are bit exact; ``pose`` gives the world-to-camera transform.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    cam_to_world: RigidPose = field(default_factory=RigidPose.identity)
    dist: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    width: int = 2048
    height: int = 1536
    id: int = 0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside image")
        object.__setattr__(self, "dist", tuple(float(d) for d in self.dist))
        if len(self.dist) != 5:
            raise ValueError("dist needs 5 coefficients (k1, k2, p1, p2, k3)")

    @classmethod
    def from_extrinsic(cls, pose: RigidPose, **kw) -> CameraModel:
        """Build from a world-to-camera pose."""
        return cls(cam_to_world=pose.inverse(), **kw)

    @cached_property
    def pose(self) -> RigidPose:
        return self.cam_to_world.inverse()

    @property
    def image_size(self) -> tuple[int, int]:
        return (self.width, self.height)

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def center(self) -> np.ndarray:
        return self.cam_to_world.translation

    def projection_matrix(self) -> np.ndarray:
        """3x4 matrix K [R | t] for undistorted pixels."""
        P = np.hstack([self.pose.rotation, self.pose.translation[:, None]])
        return self.K @ P

    def with_pose(self, pose: RigidPose) -> CameraModel:
        return CameraModel(self.fx, self.fy, self.cx, self.cy, pose.inverse(), self.dist, self.width, self.height, self.id)

    def with_intrinsics(self, fx, fy, cx, cy, dist) -> CameraModel:
        return CameraModel(fx, fy, cx, cy, self.cam_to_world, tuple(dist), self.width, self.height, self.id)

    @property
    def has_distortion(self) -> bool:
        return any(d != 0.0 for d in self.dist)


def distort_normalized(xy, dist):
    """Apply radial-tangential distortion to normalized coordinates (..., 2)."""
    k1, k2, p1, p2, k3 = dist
    xy = np.asarray(xy, dtype=float)
    x, y = xy[..., 0], xy[..., 1]
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return np.stack([xd, yd], axis=-1)


def undistort_normalized(xy_d, dist):
    """Invert ``distort_normalized`` by fixed-point iteration."""
    k1, k2, p1, p2, k3 = dist
    xy_d = np.asarray(xy_d, dtype=float)
    if not any(dist):
        return xy_d.copy()
    x, y = xy_d[..., 0].copy(), xy_d[..., 1].copy()
    xd, yd = xy_d[..., 0], xy_d[..., 1]
    for _ in range(UNDISTORT_MAX_ITERS):
        r2 = x * x + y * y
        radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
        dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
        dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
        xn = (xd - dx) / radial
        yn = (yd - dy) / radial
        step = max(float(np.max(np.abs(xn - x), initial=0.0)), float(np.max(np.abs(yn - y), initial=0.0)))
        x, y = xn, yn
        if step < UNDISTORT_TOL:
            return np.stack([x, y], axis=-1)
    raise NoConvergence(f"undistortion did not converge in {UNDISTORT_MAX_ITERS} iterations")


def world_to_camera(cam: CameraModel, points) -> np.ndarray:
    return cam.pose.apply(points)


def project_camera_points(cam: CameraModel, pc) -> np.ndarray:
    """Project camera-frame points (..., 3) to pixels without a depth check."""
    pc = np.asarray(pc, dtype=float)
    xy = pc[..., :2] / pc[..., 2:3]
    if cam.has_distortion:
        xy = distort_normalized(xy, cam.dist)
    return np.stack([cam.fx * xy[..., 0] + cam.cx, cam.fy * xy[..., 1] + cam.cy], axis=-1)


def project(cam: CameraModel, point) -> np.ndarray:
    """Project one world point to a pixel (u, v)."""
    pc = world_to_camera(cam, np.asarray(point, dtype=float).reshape(3))
    if pc[2] <= Z_EPS:
        raise BehindCamera(f"camera-frame depth {pc[2]:.3g} <= {Z_EPS}")
    return project_camera_points(cam, pc)


def project_points(cam: CameraModel, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection: returns (pixels (N, 2), depth (N,)).

    Pixels of points with depth <= 1e-9 are NaN.
    """
    pc = world_to_camera(cam, np.atleast_2d(np.asarray(points, dtype=float)))
    z = pc[:, 2]
    ok = z > Z_EPS
    uv = np.full((len(pc), 2), np.nan)
    if ok.any():
        uv[ok] = project_camera_points(cam, pc[ok])
    return uv, z


def undistort(cam: CameraModel, p) -> np.ndarray:
    """Map distorted pixels (..., 2) to the pixels an ideal pinhole camera would see."""
    p = np.asarray(p, dtype=float)
    if not cam.has_distortion:
        return p.copy()
    xy_d = np.stack([(p[..., 0] - cam.cx) / cam.fx, (p[..., 1] - cam.cy) / cam.fy], axis=-1)
    xy = undistort_normalized(xy_d, cam.dist)
    return np.stack([cam.fx * xy[..., 0] + cam.cx, cam.fy * xy[..., 1] + cam.cy], axis=-1)


def pixel_to_normalized(cam: CameraModel, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    xy_d = np.stack([(p[..., 0] - cam.cx) / cam.fx, (p[..., 1] - cam.cy) / cam.fy], axis=-1)
    return undistort_normalized(xy_d, cam.dist) if cam.has_distortion else xy_d


def frustum_mask(cam: CameraModel, points, d_min: float, d_max: float) -> np.ndarray:
    """Boolean visibility of world points (N, 3); occlusion is not modeled."""
    if not d_min < d_max:
        raise ValueError("d_min must be < d_max")
    uv, z = project_points(cam, points)
    with np.errstate(invalid="ignore"):
        inside = (uv[:, 0] >= 0) & (uv[:, 0] < cam.width) & (uv[:, 1] >= 0) & (uv[:, 1] < cam.height)
    return (z > 0) & (z >= d_min) & (z <= d_max) & inside


def frustum_visible(cam: CameraModel, point, d_min: float, d_max: float) -> bool:
    return bool(frustum_mask(cam, np.asarray(point, dtype=float).reshape(1, 3), d_min, d_max)[0])


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> RigidPose:
    """World-to-camera pose of a camera at ``eye`` looking at ``target`` (OpenCV axes)."""
    eye = np.asarray(eye, dtype=float)
    z = np.asarray(target, dtype=float) - eye
    z /= np.linalg.norm(z)
    up = np.asarray(up, dtype=float)
    if abs(z @ up) > 0.999:
        up = np.array([0.0, 1.0, 0.0]) if abs(z[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
    x = np.cross(z, up)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    R_wc = np.stack([x, y, z], axis=1)
    return RigidPose(R_wc, eye).inverse()
