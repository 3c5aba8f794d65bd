"""Planar PnP: homography initialization, reflection correction, LM refinement."""

from __future__ import annotations

import numpy as np

from ..errors import Degenerate, NoSolution
from ..geometry import CameraModel, RigidPose, pixel_to_normalized, project_to_so3
from .lm import levenberg_marquardt
from .reproj import left_perturbation_jacobian, perturb_left, project_with_jacobians
from .types import BoardModel


def _normalize_2d(p):
    c = p.mean(axis=0)
    d = np.sqrt(((p - c) ** 2).sum(axis=1)).mean()
    s = np.sqrt(2.0) / max(d, 1e-12)
    T = np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])
    return T


def homography_dlt(src, dst):
    """H with dst ~ H src for (N, 2) point sets, Hartley-normalized."""
    Ts, Td = _normalize_2d(src), _normalize_2d(dst)
    s = (np.c_[src, np.ones(len(src))] @ Ts.T)
    d = (np.c_[dst, np.ones(len(dst))] @ Td.T)
    rows = []
    for (x, y, w), (u, v, q) in zip(s, d):
        rows.append([0, 0, 0, -q * x, -q * y, -q * w, v * x, v * y, v * w])
        rows.append([q * x, q * y, q * w, 0, 0, 0, -u * x, -u * y, -u * w])
    _, _, Vt = np.linalg.svd(np.asarray(rows))
    Hn = Vt[-1].reshape(3, 3)
    H = np.linalg.inv(Td) @ Hn @ Ts
    return H / H[2, 2] if abs(H[2, 2]) > 1e-12 else H


def pose_from_homography(H) -> RigidPose:
    h1, h2, h3 = H[:, 0], H[:, 1], H[:, 2]
    lam = 2.0 / (np.linalg.norm(h1) + np.linalg.norm(h2))
    if h3[2] * lam < 0:
        lam = -lam
    r1, r2, t = lam * h1, lam * h2, lam * h3
    R = project_to_so3(np.stack([r1, r2, np.cross(r1, r2)], axis=1))
    return RigidPose(R, t)


def normal_faces_camera(cam_from_board: RigidPose) -> bool:
    """Board +z must point back toward the camera: normal . view direction < 0."""
    n = cam_from_board.rotation[:, 2]
    v = cam_from_board.translation
    return float(n @ v) < 0.0


def reflect_normal(cam_from_board: RigidPose) -> RigidPose:
    """Rotate the board by pi about an in-plane axis so its normal mirrors
    across the plane orthogonal to the line of sight (origin kept fixed)."""
    n = cam_from_board.rotation[:, 2]
    v = cam_from_board.translation / np.linalg.norm(cam_from_board.translation)
    a = n - (n @ v) * v
    if np.linalg.norm(a) < 1e-12:
        # normal along the line of sight: any perpendicular axis works
        a = np.cross(v, [1.0, 0.0, 0.0])
        if np.linalg.norm(a) < 1e-6:
            a = np.cross(v, [0.0, 1.0, 0.0])
    a /= np.linalg.norm(a)
    flip = 2.0 * np.outer(a, a) - np.eye(3)  # rotation by pi about a
    return RigidPose(flip @ cam_from_board.rotation, cam_from_board.translation)


def refine_pose(cam: CameraModel, points, uv, init: RigidPose, loss=None, loss_scale=1.0):
    """LM on the reprojection error of object points under ``cam_from_obj``."""
    points = np.asarray(points, dtype=float)
    uv = np.asarray(uv, dtype=float)

    def unpack(x):
        return RigidPose(x[:9].reshape(3, 3), x[9:])

    def fun(x):
        pc = unpack(x).apply(points)
        pred, _ = project_with_jacobians(cam.fx, cam.fy, cam.cx, cam.cy, cam.dist, pc)
        return (pred - uv).ravel()

    def jac(x):
        pc = unpack(x).apply(points)
        _, Jp = project_with_jacobians(cam.fx, cam.fy, cam.cx, cam.cy, cam.dist, pc)
        return np.einsum("nij,njk->nik", Jp, left_perturbation_jacobian(pc)).reshape(-1, 6)

    def update(x, d):
        p = perturb_left(unpack(x), d)
        return np.r_[p.rotation.ravel(), p.translation]

    x0 = np.r_[init.rotation.ravel(), init.translation]
    res = levenberg_marquardt(fun, x0, jac, loss=loss, loss_scale=loss_scale, group=2, update=update)
    return unpack(res.x), res


def solve_pnp(board: BoardModel, corner_indices, pixels, cam: CameraModel, init: RigidPose | None = None) -> RigidPose:
    """Board-to-camera pose from >= 4 corner observations (intrinsics of ``cam`` only)."""
    idx = np.asarray(corner_indices, dtype=int)
    uv = np.asarray(pixels, dtype=float).reshape(-1, 2)
    if len(idx) < 4:
        raise Degenerate(f"PnP needs >= 4 corners, got {len(idx)}")
    P = board.corner_points[idx]
    centered = P[:, :2] - P[:, :2].mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[1] <= 1e-6 * max(sv[0], 1e-12):
        raise Degenerate("observed corners are collinear")

    if init is None:
        xy = pixel_to_normalized(cam, uv)
        H = homography_dlt(P[:, :2], xy)
        if not np.all(np.isfinite(H)):
            raise NoSolution("homography estimation failed")
        init = pose_from_homography(H)
    if not normal_faces_camera(init):
        init = reflect_normal(init)
    pose, _ = refine_pose(cam, P, uv, init)
    if not normal_faces_camera(pose):
        pose, _ = refine_pose(cam, P, uv, reflect_normal(pose))
    if not (pose.is_valid(1e-6) and np.all(np.isfinite(pose.translation))) or pose.translation[2] <= 0:
        raise NoSolution("PnP refinement produced an invalid pose")
    return pose


def mean_reprojection(cam: CameraModel, cam_from_obj: RigidPose, points, uv) -> float:
    pc = cam_from_obj.apply(points)
    pred, _ = project_with_jacobians(cam.fx, cam.fy, cam.cx, cam.cy, cam.dist, pc)
    return float(np.linalg.norm(pred - uv, axis=1).mean())
