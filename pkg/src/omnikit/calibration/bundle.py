"""Multi-camera, multi-board bundle adjustment with Board 0 as the gauge."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..geometry import CameraModel, RigidPose
from .lm import LMResult, levenberg_marquardt
from .reproj import left_perturbation_jacobian, perturb_left, project_with_jacobians
from .types import CalibrationSolution, ObservationSet

MODES = ("extrinsics_only", "full", "full_with_intrinsics")


@dataclass
class BundleResult:
    solution: CalibrationSolution
    lm: LMResult
    mode: str


class _Problem:
    def __init__(self, obs: ObservationSet, boards, init: CalibrationSolution, world_board, with_intrinsics):
        self.cam_ids = sorted(init.cameras)
        self.board_ids = sorted(init.boards)
        self.free_boards = [b for b in self.board_ids if b != world_board]
        self.world_board = world_board
        self.with_intrinsics = with_intrinsics
        cam_index = {c: i for i, c in enumerate(self.cam_ids)}
        board_index = {b: i for i, b in enumerate(self.board_ids)}
        keep = np.array([c in cam_index and b in board_index for c, b in zip(obs.camera, obs.board)], dtype=bool)
        obs = obs.subset(keep)
        self.obs = obs
        self.oc = np.array([cam_index[c] for c in obs.camera], dtype=int)
        self.ob = np.array([board_index[b] for b in obs.board], dtype=int)
        self.p_loc = np.stack([boards[b].corner_points[k] for b, k in zip(obs.board, obs.corner)]) if len(obs) else np.zeros((0, 3))
        self.uv = obs.uv
        self.nc, self.nb = len(self.cam_ids), len(self.board_ids)
        self.nfb = len(self.free_boards)
        self.free_slot = {board_index[b]: j for j, b in enumerate(self.free_boards)}
        # parameter column offsets
        self.col_board = 6 * self.nc
        self.col_intr = self.col_board + 6 * self.nfb
        self.n_params = self.col_intr + (9 * self.nc if with_intrinsics else 0)
        self.fixed_board = init.boards[world_board]

    # state layout: [cam poses 12 each | board poses 12 each (all boards) | intrinsics 9 each]
    def pack(self, sol: CalibrationSolution) -> np.ndarray:
        parts = []
        for c in self.cam_ids:
            p = sol.cameras[c]
            parts.append(np.r_[p.rotation.ravel(), p.translation])
        for b in self.board_ids:
            p = sol.boards[b]
            parts.append(np.r_[p.rotation.ravel(), p.translation])
        for c in self.cam_ids:
            k = sol.intrinsics[c]
            parts.append(np.r_[k.fx, k.fy, k.cx, k.cy, k.dist])
        return np.concatenate(parts)

    def unpack_arrays(self, x):
        nc, nb = self.nc, self.nb
        cams = x[: 12 * nc].reshape(nc, 12)
        brd = x[12 * nc : 12 * (nc + nb)].reshape(nb, 12)
        intr = x[12 * (nc + nb) :].reshape(nc, 9)
        return cams[:, :9].reshape(nc, 3, 3), cams[:, 9:], brd[:, :9].reshape(nb, 3, 3), brd[:, 9:], intr

    def _forward(self, x):
        Rc, tc, Rb, tb, intr = self.unpack_arrays(x)
        Rco, Rbo = Rc[self.oc], Rb[self.ob]
        Xw = np.einsum("nij,nj->ni", Rbo, self.p_loc) + tb[self.ob]
        Xc = np.einsum("nij,nj->ni", Rco, Xw) + tc[self.oc]
        k = intr[self.oc]
        dist = (k[:, 4], k[:, 5], k[:, 6], k[:, 7], k[:, 8])
        out = project_with_jacobians(k[:, 0], k[:, 1], k[:, 2], k[:, 3], dist, Xc, want_intrinsics=self.with_intrinsics)
        return Xw, Xc, Rco, out

    def residuals(self, x):
        _, _, _, out = self._forward(x)
        return (out[0] - self.uv).ravel()

    def jacobian(self, x):
        Xw, Xc, Rco, out = self._forward(x)
        Jp = out[1]
        n = len(Xc)
        data, rr, cc = [], [], []

        Jcam = np.einsum("nij,njk->nik", Jp, left_perturbation_jacobian(Xc))  # (n,2,6)
        cols = 6 * self.oc[:, None] + np.arange(6)[None, :]
        for a in range(2):
            data.append(Jcam[:, a, :].ravel())
            rr.append(np.repeat(2 * np.arange(n) + a, 6))
            cc.append(cols.ravel())

        free = np.array([ob in self.free_slot for ob in self.ob], dtype=bool)
        if free.any():
            Jw = left_perturbation_jacobian(Xw[free])  # d Xw / d board delta
            Jb = np.einsum("nij,njk,nkl->nil", Jp[free], Rco[free], Jw)
            slots = np.array([self.free_slot[ob] for ob in self.ob[free]], dtype=int)
            cols = self.col_board + 6 * slots[:, None] + np.arange(6)[None, :]
            idx = np.nonzero(free)[0]
            for a in range(2):
                data.append(Jb[:, a, :].ravel())
                rr.append(np.repeat(2 * idx + a, 6))
                cc.append(cols.ravel())

        if self.with_intrinsics:
            Ji = out[2]
            cols = self.col_intr + 9 * self.oc[:, None] + np.arange(9)[None, :]
            for a in range(2):
                data.append(Ji[:, a, :].ravel())
                rr.append(np.repeat(2 * np.arange(n) + a, 9))
                cc.append(cols.ravel())
        return sparse.csr_matrix(
            (np.concatenate(data), (np.concatenate(rr), np.concatenate(cc))), shape=(2 * n, self.n_params)
        )

    def update(self, x, d):
        x = x.copy()
        nc, nb = self.nc, self.nb
        for i in range(nc):
            s = x[12 * i : 12 * i + 12]
            p = perturb_left(RigidPose(s[:9].reshape(3, 3), s[9:]), d[6 * i : 6 * i + 6])
            x[12 * i : 12 * i + 12] = np.r_[p.rotation.ravel(), p.translation]
        for bi, j in self.free_slot.items():
            off = 12 * (nc + bi)
            s = x[off : off + 12]
            dj = d[self.col_board + 6 * j : self.col_board + 6 * j + 6]
            p = perturb_left(RigidPose(s[:9].reshape(3, 3), s[9:]), dj)
            x[off : off + 12] = np.r_[p.rotation.ravel(), p.translation]
        if self.with_intrinsics:
            off = 12 * (nc + nb)
            x[off:] += d[self.col_intr :]
        return x

    def solution(self, x, template: CalibrationSolution) -> CalibrationSolution:
        Rc, tc, Rb, tb, intr = self.unpack_arrays(x)
        cams = {c: RigidPose(Rc[i], tc[i]) for i, c in enumerate(self.cam_ids)}
        boards = {b: RigidPose(Rb[i], tb[i]) for i, b in enumerate(self.board_ids)}
        boards[self.world_board] = self.fixed_board
        intrinsics = {}
        for i, c in enumerate(self.cam_ids):
            k = intr[i]
            intrinsics[c] = template.intrinsics[c].with_intrinsics(k[0], k[1], k[2], k[3], tuple(k[4:]))
        return CalibrationSolution(cams, boards, intrinsics)


def bundle_adjust(
    obs: ObservationSet,
    boards: dict,
    init: CalibrationSolution,
    mode: str = "full",
    world_board: int = 0,
    max_iter: int = 200,
) -> BundleResult:
    """Refine camera and board poses (and intrinsics in ``full_with_intrinsics``).

    ``extrinsics_only`` and ``full`` optimize the same pose set; the standard
    pipeline runs them back to back. Board ``world_board`` never moves.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    prob = _Problem(obs, boards, init, world_board, mode == "full_with_intrinsics")
    x0 = prob.pack(init)
    res = levenberg_marquardt(prob.residuals, x0, prob.jacobian, group=2, update=prob.update, max_iter=max_iter)
    return BundleResult(prob.solution(res.x, init), res, mode)


def observation_residuals(solution: CalibrationSolution, obs: ObservationSet, boards: dict) -> np.ndarray:
    """Per-observation reprojection error norms (px)."""
    out = np.empty(len(obs))
    cams = solution.camera_models()
    for c in np.unique(obs.camera):
        cam: CameraModel = cams[int(c)]
        m = obs.camera == c
        Xw = np.empty((int(m.sum()), 3))
        for j, (b, k) in enumerate(zip(obs.board[m], obs.corner[m])):
            Xw[j] = solution.boards[int(b)].apply(boards[int(b)].corner_points[int(k)])
        pc = cam.pose.apply(Xw)
        pred, _ = project_with_jacobians(cam.fx, cam.fy, cam.cx, cam.cy, cam.dist, pc)
        out[m] = np.linalg.norm(pred - obs.uv[m], axis=1)
    return out


def reprojection_stats(residual_norms) -> dict:
    """Mean, population std and the fractions within 1 px and 2 px."""
    r = np.asarray(residual_norms, dtype=float)
    if r.size == 0:
        return {"mean_px": 0.0, "std_px": 0.0, "frac_le_1px": 1.0, "frac_le_2px": 1.0, "n": 0}
    return {
        "mean_px": float(r.mean()),
        "std_px": float(r.std()),
        "frac_le_1px": float(np.mean(r <= 1.0)),
        "frac_le_2px": float(np.mean(r <= 2.0)),
        "n": int(r.size),
    }
