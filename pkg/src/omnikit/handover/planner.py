"""Offline handover search: candidate grid, category constraints, bimanual IK and scoring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyCandidateSet, NoFeasibleCandidate, NoSolution
from ..geometry import RigidPose, rot_y, rot_z
from .kinematics import KinematicChain, ik_solve, limit_margin, manipulability

CATEGORIES = ("spherical", "elongated")
R_SPHERICAL = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
R_ELONGATED = np.diag([-1.0, 1.0, -1.0])
DELTA_P = {"spherical": np.array([0.03, 0.0, 0.01]), "elongated": np.array([0.06, 0.0, 0.0])}
R_CATEGORY = {"spherical": R_SPHERICAL, "elongated": R_ELONGATED}
RETRACT = {"spherical": 0.05, "elongated": 0.08}
ANNULUS = (0.35, 0.75)
DOWN = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True)
class Weights:
    c: float = 0.15
    w: float = 0.15
    m: float = 0.15
    tcp: float = 0.4
    z: float = 0.15


@dataclass(frozen=True)
class HandoverConfig:
    half_xy: float = 0.15
    half_z: float = 0.10
    pitch: float = 0.05
    n_theta: int = 8
    n_phi: int = 3
    phi_max: float = np.deg2rad(20.0)
    restarts: int = 4
    pre_restarts: int = 16
    weights: Weights = field(default_factory=Weights)


@dataclass
class HandoverCandidate:
    index: int
    position: np.ndarray
    giver: RigidPose
    receiver: RigidPose
    q_g: np.ndarray
    q_r: np.ndarray
    scores: dict
    total: float = float("nan")
    q_pre_g: np.ndarray | None = None
    q_pre_r: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {
            "index": self.index,
            "position": self.position.tolist(),
            "giver": {"R": self.giver.rotation.tolist(), "p": self.giver.translation.tolist()},
            "receiver": {"R": self.receiver.rotation.tolist(), "p": self.receiver.translation.tolist()},
            "q_g": self.q_g.tolist(),
            "q_r": self.q_r.tolist(),
            "scores": dict(self.scores),
            "total": self.total,
        }
        if self.q_pre_g is not None:
            out["q_pre_g"] = self.q_pre_g.tolist()
            out["q_pre_r"] = self.q_pre_r.tolist()
        return out


def nominal_center(base_g: RigidPose, base_r: RigidPose) -> np.ndarray:
    bg, br = base_g.translation, base_r.translation
    c = 0.5 * (bg + br)
    c[2] = max(0.5 * (bg[2] + br[2]) + 0.45, 0.4)
    return c


def in_annulus(p, base: RigidPose) -> bool:
    d = np.linalg.norm(np.asarray(p)[:2] - base.translation[:2])
    return ANNULUS[0] <= d <= ANNULUS[1]


def sample_candidate_positions(base_g: RigidPose, base_r: RigidPose, half_xy: float = 0.15, half_z: float = 0.10,
                               pitch: float = 0.05) -> np.ndarray:
    """Grid around the nominal center, kept where both bases see it inside their xy annulus."""
    if np.allclose(base_g.translation, base_r.translation):
        raise ValueError("bases must be distinct")
    c = nominal_center(base_g, base_r)
    # whole steps only, so the grid never leaves the box
    nxy, nz = int(np.floor(half_xy / pitch + 1e-9)), int(np.floor(half_z / pitch + 1e-9))
    offs_xy = pitch * np.arange(-nxy, nxy + 1)
    offs_z = pitch * np.arange(-nz, nz + 1)
    pts = [c + np.array([dx, dy, dz]) for dz in offs_z for dy in offs_xy for dx in offs_xy]
    kept = [p for p in pts if in_annulus(p, base_g) and in_annulus(p, base_r)]
    if not kept:
        raise EmptyCandidateSet("no grid point lies in both reachable annuli")
    return np.array(kept)


def receiver_pose(giver: RigidPose, category: str) -> RigidPose:
    if category not in CATEGORIES:
        raise ValueError(f"category must be one of {CATEGORIES}")
    R = giver.rotation
    return RigidPose(R @ R_CATEGORY[category], giver.translation + R @ DELTA_P[category])


def tcp_score(R_g, R_r, category: str) -> float:
    xg, yg, zg = np.asarray(R_g).T
    xr, yr, zr = np.asarray(R_r).T
    if category == "spherical":
        s_z = (1.0 - zg @ zr) / 2.0
        s_x = 1.0 - abs(xg @ xr)
        return float(0.6 * s_z + 0.4 * s_x)
    if category == "elongated":
        s_y = abs(yg @ yr)
        s_x = (1.0 - xg @ xr) / 2.0
        return float(0.5 * s_y + 0.5 * s_x)
    raise ValueError(f"category must be one of {CATEGORIES}")


def z_down_score(R) -> float:
    return float((1.0 - np.asarray(R)[:, 2] @ DOWN) / 2.0)


def continuity(q, q_ref) -> float:
    return float(np.exp(-np.linalg.norm(np.asarray(q) - np.asarray(q_ref))))


def score_candidate(scores: dict, weights: Weights = Weights()) -> float:
    """Weighted sum of the arm-averaged components ``c``, ``w``, ``m``, ``z_down`` and ``s_tcp``."""
    return float(weights.c * scores["c"] + weights.w * scores["w"] + weights.m * scores["m"]
                 + weights.tcp * scores["s_tcp"] + weights.z * scores["z_down"])


def giver_orientations(base_g: RigidPose, base_r: RigidPose, n_theta: int, n_phi: int, phi_max: float):
    """Approach axis yawed about world z from the giver-to-receiver heading, tilted down by phi."""
    d = base_r.translation - base_g.translation
    heading = np.arctan2(d[1], d[0])
    phis = [0.0] if n_phi == 1 else np.linspace(0.0, phi_max, n_phi)
    out = []
    for k in range(n_theta):
        for phi in phis:
            out.append(rot_z(heading + 2 * np.pi * k / n_theta) @ rot_y(np.pi / 2 + phi))
    return out


def prehandover(q_handover, chain: KinematicChain, category: str, restarts: int = 16, seed: int = 0) -> np.ndarray:
    """Retract along the TCP approach axis by the category distance, same orientation."""
    T = chain.fk(q_handover)
    target = RigidPose(T.rotation, T.translation - RETRACT[category] * T.rotation[:, 2])
    return ik_solve(chain, target, restarts=restarts, seed=seed, q_init=q_handover)


def _arm_terms(chain, q, q_ref):
    return continuity(q, q_ref), manipulability(chain, q), limit_margin(chain, q)


def plan_handover(base_g: RigidPose, base_r: RigidPose, chains, category: str, config: HandoverConfig = HandoverConfig(),
                  seed: int = 0, q_prepick=None) -> HandoverCandidate:
    """Exhaustive grid search; the best candidate also carries both prehandover configurations.

    ``chains`` is (giver, receiver) in base-local form; they are placed at the
    given bases here. Manipulability is normalized by its maximum over the
    valid candidates so every component lies in [0, 1].
    """
    if category not in CATEGORIES:
        raise ValueError(f"category must be one of {CATEGORIES}")
    cg, cr = chains[0].with_base(base_g), chains[1].with_base(base_r)
    ref_g, ref_r = (cg.home, cr.home) if q_prepick is None else q_prepick
    try:
        positions = sample_candidate_positions(base_g, base_r, config.half_xy, config.half_z, config.pitch)
    except EmptyCandidateSet as e:
        raise NoFeasibleCandidate(str(e)) from e
    rots = giver_orientations(base_g, base_r, config.n_theta, config.n_phi, config.phi_max)

    valid, raw = [], []
    idx = -1
    for p in positions:
        for R in rots:
            idx += 1
            giver = RigidPose(R, p)
            recv = receiver_pose(giver, category)
            if not in_annulus(recv.translation, base_r):
                continue
            try:
                q_g = ik_solve(cg, giver, restarts=config.restarts, seed=seed)
                q_r = ik_solve(cr, recv, restarts=config.restarts, seed=seed)
            except NoSolution:
                continue
            Rg, Rr = cg.fk(q_g).rotation, cr.fk(q_r).rotation
            tg, tr = _arm_terms(cg, q_g, ref_g), _arm_terms(cr, q_r, ref_r)
            valid.append(HandoverCandidate(idx, p.copy(), giver, recv, q_g, q_r, {
                "s_tcp": tcp_score(Rg, Rr, category),
                "c": 0.5 * (tg[0] + tr[0]),
                "m": 0.5 * (tg[2] + tr[2]),
                "z_down": 0.5 * (z_down_score(Rg) + z_down_score(Rr)),
            }))
            raw.append(0.5 * (tg[1] + tr[1]))
    if not valid:
        raise NoFeasibleCandidate("no candidate had IK solutions for both arms")

    w_max = max(raw)
    for cand, w in zip(valid, raw):
        cand.scores["w"] = w / w_max if w_max > 0 else 0.0
        cand.total = score_candidate(cand.scores, config.weights)
    # best first; the earlier grid index wins ties
    for cand in sorted(valid, key=lambda c: (-c.total, c.index)):
        try:
            cand.q_pre_g = prehandover(cand.q_g, cg, category, config.pre_restarts, seed)
            cand.q_pre_r = prehandover(cand.q_r, cr, category, config.pre_restarts, seed)
        except NoSolution:
            continue
        return cand
    raise NoFeasibleCandidate("no candidate had a reachable prehandover for both arms")
