"""Board pose from several calibrated cameras: Cauchy pass, gate, Huber pass."""

from __future__ import annotations

import numpy as np

from ..errors import Degenerate, NoDetections, NoSolution
from ..geometry import CameraModel, RigidPose, compose
from .lm import levenberg_marquardt
from .pnp import solve_pnp
from .reproj import left_perturbation_jacobian, perturb_left, project_with_jacobians
from .types import BoardModel

CAUCHY_SCALE_PX = 2.0
HUBER_SCALE_PX = 1.0
OUTLIER_GATE_PX = 10.0


def _stack(board: BoardModel, detections: dict, cameras: dict):
    cams, pts, uvs = [], [], []
    for cid in sorted(detections):
        idx, uv = detections[cid]
        idx = np.asarray(idx, dtype=int)
        cams.append(np.full(len(idx), cid))
        pts.append(board.corner_points[idx])
        uvs.append(np.asarray(uv, dtype=float).reshape(-1, 2))
    return np.concatenate(cams), np.concatenate(pts), np.concatenate(uvs)


def _residual_fn(cameras: dict, cam_ids, pts, uv):
    groups = [(cameras[c], cam_ids == c) for c in np.unique(cam_ids)]

    def unpack(x):
        return RigidPose(x[:9].reshape(3, 3), x[9:])

    def fun(x):
        T = unpack(x)
        Xw = T.apply(pts)
        out = np.empty_like(uv)
        for cam, m in groups:
            pc = cam.pose.apply(Xw[m])
            out[m], _ = project_with_jacobians(cam.fx, cam.fy, cam.cx, cam.cy, cam.dist, pc)
        return (out - uv).ravel()

    def jac(x):
        T = unpack(x)
        Xw = T.apply(pts)
        Jw = left_perturbation_jacobian(Xw)
        J = np.empty((len(pts), 2, 6))
        for cam, m in groups:
            R = cam.pose.rotation
            pc = cam.pose.apply(Xw[m])
            _, Jp = project_with_jacobians(cam.fx, cam.fy, cam.cx, cam.cy, cam.dist, pc)
            J[m] = np.einsum("nij,jk,nkl->nil", Jp, R, Jw[m])
        return J.reshape(-1, 6)

    def update(x, d):
        p = perturb_left(unpack(x), d)
        return np.r_[p.rotation.ravel(), p.translation]

    return fun, jac, update, unpack


def refine_board_pose_multiview(
    board: BoardModel,
    detections: dict,
    cameras: dict,
    init: RigidPose | None = None,
) -> RigidPose:
    """Board-to-world pose from ``detections[camera_id] = (corner_indices, pixels)``.

    Camera extrinsics are held fixed. Without ``init`` every camera with >= 4
    corners proposes a PnP pose; the one with the lowest error across all
    views seeds the optimization.
    """
    detections = {c: d for c, d in detections.items() if len(d[0]) > 0}
    if not any(len(d[0]) >= 4 for d in detections.values()):
        raise NoDetections("no camera observed >= 4 corners")
    cam_ids, pts, uv = _stack(board, detections, cameras)
    fun, jac, update, unpack = _residual_fn(cameras, cam_ids, pts, uv)

    if init is None:
        best = None
        for cid in sorted(detections):
            idx, px = detections[cid]
            if len(idx) < 4:
                continue
            cam: CameraModel = cameras[cid]
            try:
                cam_from_board = solve_pnp(board, idx, px, cam)
            except (Degenerate, NoSolution):
                continue
            cand = compose(cam.cam_to_world, cam_from_board)
            x = np.r_[cand.rotation.ravel(), cand.translation]
            err = float(np.median(np.linalg.norm(fun(x).reshape(-1, 2), axis=1)))
            if best is None or err < best[0]:
                best = (err, cand)
        if best is None:
            raise NoSolution("no camera produced a PnP initialization")
        init = best[1]

    x0 = np.r_[init.rotation.ravel(), init.translation]
    res = levenberg_marquardt(fun, x0, jac, loss="cauchy", loss_scale=CAUCHY_SCALE_PX, group=2, update=update)
    err = np.linalg.norm(fun(res.x).reshape(-1, 2), axis=1)
    keep = err <= OUTLIER_GATE_PX
    if keep.sum() >= 4 and not keep.all():
        fun, jac, update, unpack = _residual_fn(cameras, cam_ids[keep], pts[keep], uv[keep])
    res = levenberg_marquardt(fun, res.x, jac, loss="huber", loss_scale=HUBER_SCALE_PX, group=2, update=update)
    return unpack(res.x)
