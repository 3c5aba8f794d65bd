"""Serial chains in modified DH form, damped-least-squares IK and kinematic quality scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NoSolution
from ..geometry import RigidPose, log_so3, rot_z
from ..seeding import stream

POS_TOL = 1e-3                      # m
ROT_TOL = np.deg2rad(0.5)
DAMPING = 1e-2
MAX_STEPS = 300
MAX_JOINT_STEP = 0.2           # rad per iteration


@dataclass(frozen=True, eq=False)
class KinematicChain:
    """Revolute chain; row i of ``dh`` is (a_{i-1}, alpha_{i-1}, d_i, theta_offset_i)."""

    name: str
    dh: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    tool: RigidPose = field(default_factory=RigidPose.identity)
    base: RigidPose = field(default_factory=RigidPose.identity)
    home: np.ndarray | None = None

    def __post_init__(self):
        dh = np.asarray(self.dh, dtype=float).reshape(-1, 4)
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if len(dh) < 2:
            raise ValueError("chain needs >= 2 joints")
        if lo.shape != (len(dh),) or hi.shape != (len(dh),) or np.any(lo >= hi):
            raise ValueError("joint limits must satisfy lower < upper per joint")
        object.__setattr__(self, "dh", dh)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        home = 0.5 * (lo + hi) if self.home is None else np.asarray(self.home, float)
        object.__setattr__(self, "home", home)

    @property
    def n(self) -> int:
        return len(self.dh)

    @property
    def full_pose(self) -> bool:
        """Whether the chain can hit arbitrary 6-DoF targets (else position-only IK)."""
        return self.n >= 6

    def with_base(self, base: RigidPose) -> KinematicChain:
        return KinematicChain(self.name, self.dh, self.lower, self.upper, self.tool, base, self.home)

    def frames(self, q):
        """World transforms of each joint frame (n + 1 entries, last is the tool)."""
        a, alpha, d, off = self.dh.T
        ca, sa = np.cos(alpha), np.sin(alpha)
        th = np.asarray(q, dtype=float) + off
        ct, st = np.cos(th), np.sin(th)
        A = np.zeros((self.n, 4, 4))
        A[:, 0, 0], A[:, 0, 1], A[:, 0, 3] = ct, -st, a
        A[:, 1, 0], A[:, 1, 1], A[:, 1, 2], A[:, 1, 3] = st * ca, ct * ca, -sa, -sa * d
        A[:, 2, 0], A[:, 2, 1], A[:, 2, 2], A[:, 2, 3] = st * sa, ct * sa, ca, ca * d
        A[:, 3, 3] = 1.0
        T = self.base.matrix()
        out = []
        for Ai in A:
            T = T @ Ai
            out.append(T)
        out.append(T @ self.tool.matrix())
        return out

    def fk(self, q) -> RigidPose:
        return RigidPose.from_matrix(self.frames(q)[-1])

    def jacobian(self, q) -> np.ndarray:
        """6 x n geometric Jacobian, linear rows first, in the world frame."""
        return _jacobian_from_frames(self.frames(q))


def _jacobian_from_frames(F) -> np.ndarray:
    A = np.stack(F[:-1])
    z, o = A[:, :3, 2], A[:, :3, 3]
    return np.vstack([np.cross(z, F[-1][:3, 3] - o).T, z.T])


def planar_two_link(l1: float = 0.5, l2: float = 0.5) -> KinematicChain:
    dh = [[0.0, 0.0, 0.0, 0.0], [l1, 0.0, 0.0, 0.0]]
    return KinematicChain("planar2", dh, [-np.pi, -np.pi], [np.pi, np.pi], RigidPose(np.eye(3), [l2, 0.0, 0.0]),
                          home=np.array([0.0, np.pi / 2]))


def seven_axis_arm() -> KinematicChain:
    """Panda-geometry arm with research-arm joint limits and a parallel-gripper TCP."""
    dh = [
        [0.0, 0.0, 0.333, 0.0],
        [0.0, -np.pi / 2, 0.0, 0.0],
        [0.0, np.pi / 2, 0.316, 0.0],
        [0.0825, np.pi / 2, 0.0, 0.0],
        [-0.0825, -np.pi / 2, 0.384, 0.0],
        [0.0, np.pi / 2, 0.0, 0.0],
        [0.088, np.pi / 2, 0.0, 0.0],
    ]
    lower = [-2.7437, -1.7837, -2.9007, -3.0421, -2.8065, 0.5445, -3.0159]
    upper = [2.7437, 1.7837, 2.9007, -0.1518, 2.8065, 4.5169, 3.0159]
    tool = RigidPose(rot_z(-np.pi / 4), [0.0, 0.0, 0.107 + 0.1034])
    home = np.array([0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785])
    return KinematicChain("arm7", dh, lower, upper, tool, home=home)


BUILTIN_CHAINS = {"planar2": planar_two_link, "arm7": seven_axis_arm}


def _residual(T, target: RigidPose):
    return target.translation - T[:3, 3], log_so3(target.rotation @ T[:3, :3].T)


def pose_residual(chain: KinematicChain, q, target: RigidPose):
    return _residual(chain.frames(q)[-1], target)


def within_tolerance(chain: KinematicChain, q, target: RigidPose, position_only: bool) -> bool:
    e_p, e_r = pose_residual(chain, q, target)
    return np.linalg.norm(e_p) < POS_TOL and (position_only or np.linalg.norm(e_r) < ROT_TOL)


def _dls(chain, q, target, position_only, steps=MAX_STEPS):
    q = np.clip(np.array(q, dtype=float), chain.lower, chain.upper)
    best, stall = np.inf, 0
    for _ in range(steps):
        F = chain.frames(q)
        e_p, e_r = _residual(F[-1], target)
        e = e_p if position_only else np.r_[e_p, e_r]
        err = np.linalg.norm(e)
        if err < 1e-10:
            break
        # give up on a start that has stopped improving
        if err < best * (1 - 1e-4):
            best, stall = err, 0
        else:
            stall += 1
            if stall >= 15:
                break
        J = _jacobian_from_frames(F)
        J = J[:3] if position_only else J
        dq = J.T @ np.linalg.solve(J @ J.T + DAMPING**2 * np.eye(len(e)), e)
        n = np.abs(dq).max()
        if n > MAX_JOINT_STEP:
            dq *= MAX_JOINT_STEP / n
        q = np.clip(q + dq, chain.lower, chain.upper)
    return q


def ik_solve(chain: KinematicChain, target: RigidPose, restarts: int = 8, seed: int = 0, q_init=None,
             position_only: bool | None = None) -> np.ndarray:
    """Damped least squares from ``q_init`` (or home), then from seeded random starts.

    Joint limits are enforced by clamping after every step. Success needs the
    position within 1 mm and, for full-pose chains, the orientation within 0.5 deg.
    """
    if not (np.all(np.isfinite(target.translation)) and np.all(np.isfinite(target.rotation))):
        raise ValueError("target must be finite")
    position_only = (not chain.full_pose) if position_only is None else position_only
    rng = stream(seed, "ik", chain.name)
    starts = [chain.home if q_init is None else np.asarray(q_init, float)]
    starts += [rng.uniform(chain.lower, chain.upper) for _ in range(restarts)]
    for q0 in starts:
        q = _dls(chain, q0, target, position_only)
        if within_tolerance(chain, q, target, position_only):
            return q
    raise NoSolution(f"IK failed after {len(starts)} starts")


def manipulability(chain: KinematicChain, q, position_only: bool | None = None) -> float:
    position_only = (not chain.full_pose) if position_only is None else position_only
    J = chain.jacobian(q)
    J = J[:3] if position_only else J
    # the smaller Gram matrix keeps under-actuated chains (planar 2-link) non-zero
    G = J @ J.T if J.shape[0] <= J.shape[1] else J.T @ J
    return float(np.sqrt(max(np.linalg.det(G), 0.0)))


def limit_margin(chain: KinematicChain, q) -> float:
    """Smallest distance to a joint limit, relative to the half range (1 at mid-range, 0 at a limit)."""
    q = np.asarray(q, float)
    half = 0.5 * (chain.upper - chain.lower)
    return float(np.min(np.minimum(q - chain.lower, chain.upper - q) / half))
