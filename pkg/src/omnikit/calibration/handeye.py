"""Robot base registration: A Z = Z B over pose pairs, then the flange-to-board offset."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..errors import DegenerateMotion, TooFewPoses
from ..geometry import RigidPose, compose, exp_so3, log_so3, log_so3_batch, project_to_so3, skew
from ..seeding import stream
from .lm import levenberg_marquardt
from .types import HandEyeSolution

HUBER_SCALE = 0.01
PARALLEL_AXIS_DEG = 1.0
DEFAULT_N = 20
DEFAULT_RP = 0.07
DEFAULT_RTHETA = np.deg2rad(30.0)


def sample_handeye_configs(center: RigidPose, n: int = DEFAULT_N, r_p: float = DEFAULT_RP,
                           r_theta: float = DEFAULT_RTHETA, seed: int = 0) -> list[RigidPose]:
    """Flange poses scattered around ``center``; rotations perturbed in the local frame."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = stream(seed, "handeye-configs")
    out = []
    for _ in range(n):
        dt = rng.uniform(-r_p, r_p, 3)
        w = rng.uniform(-r_theta, r_theta, 3)
        out.append(RigidPose(center.rotation @ exp_so3(w), center.translation + dt))
    return out


def localize_anchor(T_world_anchor: RigidPose, Z: RigidPose) -> RigidPose:
    """Base pose in the anchor-board frame from one capture of the anchor."""
    return compose(T_world_anchor.inverse(), Z)


def _relative_motions(board_world, flange_base):
    A, B = [], []
    for i, j in combinations(range(len(board_world)), 2):
        A.append(compose(board_world[j], board_world[i].inverse()))
        B.append(compose(flange_base[j], flange_base[i].inverse()))
    return A, B


def _motion_is_degenerate(B) -> bool:
    axes = []
    for b in B:
        w = log_so3(b.rotation)
        if np.linalg.norm(w) > 1e-9:
            axes.append(w / np.linalg.norm(w))
    if not axes:
        return True
    cos_tol = np.cos(np.deg2rad(PARALLEL_AXIS_DEG))
    ref = axes[0]
    return all(abs(a @ ref) >= cos_tol for a in axes)


def _modified_rodrigues(R):
    w = log_so3(R)
    th = np.linalg.norm(w)
    if th < 1e-15:
        return np.zeros(3)
    return 2.0 * np.sin(th / 2.0) * w / th


def tsai_lenz(A, B) -> RigidPose:
    """Closed-form Z for A_k Z = Z B_k (rotation then translation, least squares)."""
    M, rhs = [], []
    for a, b in zip(A, B):
        pa, pb = _modified_rodrigues(a.rotation), _modified_rodrigues(b.rotation)
        M.append(skew(pa + pb))
        rhs.append(pb - pa)
    r = np.linalg.lstsq(np.vstack(M), np.concatenate(rhs), rcond=None)[0]
    # r is the tan-half-angle vector of R_Z
    nr = np.linalg.norm(r)
    R = exp_so3(2.0 * np.arctan(nr) * r / nr) if nr > 0 else np.eye(3)
    C = np.vstack([a.rotation - np.eye(3) for a in A])
    d = np.concatenate([R @ b.translation - a.translation for a, b in zip(A, B)])
    t = np.linalg.lstsq(C, d, rcond=None)[0]
    return RigidPose(project_to_so3(R), t)


def _pose_vec(p: RigidPose):
    return np.r_[p.rotation.ravel(), p.translation]


def _vec_pose(x) -> RigidPose:
    return RigidPose(x[:9].reshape(3, 3), x[9:])


def _left_update(x, d):
    R = exp_so3(d[3:]) @ x[:9].reshape(3, 3)
    t = exp_so3(d[3:]) @ x[9:] + d[:3]
    return np.r_[R.ravel(), t]


def _refine_Z(A, B, Z0: RigidPose) -> RigidPose:
    RA = np.stack([a.rotation for a in A])
    tA = np.stack([a.translation for a in A])
    RB = np.stack([b.rotation for b in B])
    tB = np.stack([b.translation for b in B])

    def fun(x):
        R, t = x[:9].reshape(3, 3), x[9:]
        lhs = RA @ R
        rhs = R @ RB
        rot = log_so3_batch(lhs @ np.transpose(rhs, (0, 2, 1)))
        trans = tA + RA @ t - (tB @ R.T + t)
        return np.hstack([trans, rot]).ravel()

    jac = _numeric_jacobian(fun, _left_update)
    res = levenberg_marquardt(fun, _pose_vec(Z0), jac, loss="huber", loss_scale=HUBER_SCALE, group=6, update=_left_update)
    return _vec_pose(res.x)


def _numeric_jacobian(fun, update, eps=1e-7):
    def jac(x):
        cols = []
        for k in range(6):
            d = np.zeros(6)
            d[k] = eps
            rp = fun(update(x, d))
            d[k] = -eps
            rm = fun(update(x, d))
            cols.append((rp - rm) / (2 * eps))
        return np.stack(cols, axis=1)

    return jac


def _solve_X(board_world, flange_base, Z: RigidPose) -> RigidPose:
    Xs = [compose(b.inverse(), compose(Z, f)) for b, f in zip(board_world, flange_base)]
    X0 = RigidPose(project_to_so3(sum(x.rotation for x in Xs)), np.mean([x.translation for x in Xs], axis=0))
    Rb = np.stack([b.rotation for b in board_world])
    tb = np.stack([b.translation for b in board_world])
    ZF = [compose(Z, f) for f in flange_base]
    Rzf = np.stack([p.rotation for p in ZF])
    tzf = np.stack([p.translation for p in ZF])

    def fun(x):
        R, t = x[:9].reshape(3, 3), x[9:]
        rot = log_so3_batch(Rb @ R @ np.transpose(Rzf, (0, 2, 1)))
        trans = np.einsum("nij,j->ni", Rb, t) + tb - tzf
        return np.hstack([trans, rot]).ravel()

    # X enters on the right of the board pose: perturb it on the right
    def update(x, d):
        R = x[:9].reshape(3, 3) @ exp_so3(d[3:])
        return np.r_[R.ravel(), x[9:] + d[:3]]

    res = levenberg_marquardt(fun, _pose_vec(X0), _numeric_jacobian(fun, update), loss="huber", loss_scale=HUBER_SCALE, group=6, update=update)
    return _vec_pose(res.x)


def handeye_residuals(board_world, flange_base, Z: RigidPose, X: RigidPose):
    """Per-sample Frobenius norm of T_board,i X - Z T_flange,i plus its rotation/translation parts."""
    fro, rot, trans = [], [], []
    for b, f in zip(board_world, flange_base):
        L = compose(b, X)
        R = compose(Z, f)
        fro.append(float(np.linalg.norm(L.matrix() - R.matrix())))
        rot.append(float(np.linalg.norm(log_so3(L.rotation @ R.rotation.T))))
        trans.append(float(np.linalg.norm(L.translation - R.translation)))
    return np.array(fro), np.array(rot), np.array(trans)


def solve_hand_eye(board_world_poses, flange_fk_poses) -> HandEyeSolution:
    """Z (base to world) and X (flange to board) from paired board/flange poses."""
    bw, fb = list(board_world_poses), list(flange_fk_poses)
    if len(bw) != len(fb):
        raise ValueError("board and flange pose lists differ in length")
    if len(bw) < 2:
        raise TooFewPoses(f"need >= 3 pose pairs, got {len(bw)}")
    A, B = _relative_motions(bw, fb)
    if _motion_is_degenerate(B):
        raise DegenerateMotion("relative rotation axes are parallel within 1 deg")
    if len(bw) < 3:
        raise TooFewPoses(f"need >= 3 pose pairs, got {len(bw)}")
    Z = _refine_Z(A, B, tsai_lenz(A, B))
    X = _solve_X(bw, fb, Z)
    fro, rot, trans = handeye_residuals(bw, fb, Z, X)
    return HandEyeSolution(Z, X, float(fro.max()), float(fro.mean()), float(rot.max()), float(trans.max()))


def generate_handeye_data(seed: int, n: int = DEFAULT_N, noise_t: float = 0.0, noise_rot: float = 0.0):
    """Synthetic (Z, X, board_world_poses, flange_poses) with per-axis Gaussian pose noise on the boards."""
    rng = stream(seed, "handeye-truth")
    Z = RigidPose(exp_so3(rng.normal(0, 0.6, 3)), rng.uniform(-2.0, 2.0, 3))
    X = RigidPose(exp_so3(rng.normal(0, 0.5, 3)), rng.uniform(-0.08, 0.08, 3))
    center = RigidPose(exp_so3([np.pi, 0.0, 0.0]), np.array([0.5, 0.0, 0.4]))
    flanges = sample_handeye_configs(center, n, seed=seed)
    noise = stream(seed, "handeye-noise")
    boards = []
    for f in flanges:
        T = compose(compose(Z, f), X.inverse())
        if noise_t or noise_rot:
            T = RigidPose(exp_so3(noise.normal(0, noise_rot, 3)) @ T.rotation, T.translation + noise.normal(0, noise_t, 3))
        boards.append(T)
    return Z, X, boards, flanges
