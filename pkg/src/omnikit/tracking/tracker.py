"""Cross-camera association, joint fusion and the track lifecycle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import Degenerate, NoConsensus
from ..geometry import CameraModel, undistort_normalized
from ..seeding import stream
from .aggregator import Detection
from .one_euro import JointSmoother
from .skeleton import HIPS, N_JOINTS, TORSO, hip_midpoint, torso_centroid
from .triangulation import _dlt, projection_stack, reprojection_errors, triangulate_dlt, triangulate_ransac

CONF_THRESHOLD = 3.0
TAU_BASE_PX = 150.0
D_REF = 3.0
STAGE2_INLIER_PX = 20.0
MIN_SUPPORT = 3
CONFIRM_HITS = 3
PRUNE_MISSES = 60
REID_FRAMES = 90
REID_RADIUS = 1.0
VEL_MOMENTUM = 0.7
VEL_CLAMP = 0.5   # m/frame


@dataclass
class PersonTrack:
    id: int
    joints: np.ndarray              # (65, 3) last known positions
    valid: np.ndarray               # (65,) joints ever observed
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    n_miss: int = 0
    state: str = "tentative"        # tentative | confirmed | pruned
    hits: int = 1
    last_seen: int = 0

    def center(self):
        c = hip_midpoint(self.joints, self.valid)
        if c is None:
            c = torso_centroid(self.joints, self.valid)
        if c is None:
            c = self.joints[self.valid].mean(axis=0)
        return c


def predict_track(track: PersonTrack) -> np.ndarray:
    """Joints advanced by the velocity over the missed frames."""
    out = track.joints.copy()
    out[track.valid] += track.velocity * track.n_miss
    return out


def clamp_displacement(d, limit: float = VEL_CLAMP):
    n = float(np.linalg.norm(d))
    return d if n <= limit else d * (limit / n)


def update_velocity(track: PersonTrack, new_center, frame: int) -> None:
    gap = max(frame - track.last_seen, 1)
    d = clamp_displacement((np.asarray(new_center) - track.center()) / gap)
    track.velocity = VEL_MOMENTUM * track.velocity + (1.0 - VEL_MOMENTUM) * d


@dataclass
class ReIdCache:
    entries: list = field(default_factory=list)   # dicts: old_id, position, expiry

    def add(self, track_id: int, position, frame: int) -> None:
        self.entries.append({"old_id": track_id, "position": np.asarray(position, float), "expiry": frame + REID_FRAMES})

    def purge(self, frame: int) -> None:
        self.entries = [e for e in self.entries if frame < e["expiry"]]

    def claim(self, position, frame: int):
        """Id of the nearest live entry within the radius (removed from the cache), else None."""
        self.purge(frame)
        best, best_d = None, REID_RADIUS
        for e in self.entries:
            d = float(np.linalg.norm(e["position"] - position))
            if d <= best_d:
                best, best_d = e, d
        if best is None:
            return None
        self.entries.remove(best)
        return best["old_id"]


# ------------------------------------------------------------------ association


def _pinhole(cam: CameraModel, X):
    pc = cam.pose.apply(X)
    return cam.K[:2, :2] @ (pc[:2] / pc[2]) + cam.K[:2, 2], pc[2]


def _detection_torso(det: Detection):
    ok = det.score[list(TORSO)] > CONF_THRESHOLD
    if not ok.any():
        return None
    return det.uv[np.array(TORSO)[ok]].mean(axis=0)


def gate_radius(d_cam: float) -> float:
    return TAU_BASE_PX * D_REF / d_cam


def associate_stage1(tracks, detections: dict, cameras: dict) -> dict:
    """Per-camera Hungarian matching of projected torso centroids. Returns cam -> [(track_id, det_index)]."""
    out = {}
    preds = []
    for t in tracks:
        J = predict_track(t)
        c = torso_centroid(J, t.valid)
        h = hip_midpoint(J, t.valid)
        if c is not None:
            preds.append((t.id, c, h if h is not None else c))
    for cid in sorted(detections):
        dets = detections[cid]
        cam = cameras[cid]
        det_c = [(k, _detection_torso(d)) for k, d in enumerate(dets)]
        det_c = [(k, c) for k, c in det_c if c is not None]
        rows = []
        for tid, c, h in preds:
            uv, z = _pinhole(cam, c)
            z_hip = cam.pose.apply(h)[2]
            if z > 1e-9 and z_hip > 1e-9:
                rows.append((tid, uv, gate_radius(z_hip)))
        if not rows or not det_c:
            out[cid] = []
            continue
        C = np.array([[np.linalg.norm(uv - dc) for _, dc in det_c] for _, uv, _ in rows])
        tau = np.array([r[2] for r in rows])
        cost = np.where(C <= tau[:, None], C, 1e12)
        ri, ci = linear_sum_assignment(cost)
        out[cid] = [(rows[r][0], det_c[c][0]) for r, c in zip(ri, ci) if C[r, c] <= tau[r]]
    return out


@dataclass
class Candidate:
    point: np.ndarray            # triangulated hip midpoint
    members: dict                # cam -> det index
    error: float


def _detection_hip(det: Detection):
    if np.all(det.score[list(HIPS)] > CONF_THRESHOLD):
        return det.uv[list(HIPS)].mean(axis=0)
    return None


def associate_stage2(unmatched: dict, cameras: dict) -> list:
    """Triangulate hip midpoints over all camera pairs, keep greedy >= 3-camera consensus.

    ``unmatched`` maps camera id to a list of (det_index, Detection).
    """
    obs = []
    for cid in sorted(unmatched):
        for k, det in unmatched[cid]:
            h = _detection_hip(det)
            if h is not None:
                obs.append((cid, k, h))
    cams_with = sorted({o[0] for o in obs})
    if len(cams_with) < 2:
        return []
    cam_index = {c: i for i, c in enumerate(cams_with)}
    P = projection_stack([cameras[c] for c in cams_with])
    uv = np.array([o[2] for o in obs])
    ocam = np.array([cam_index[o[0]] for o in obs])
    pairs = [(a, b) for a in range(len(obs)) for b in range(a + 1, len(obs)) if obs[a][0] != obs[b][0]]
    if not pairs:
        return []
    pa = np.array(pairs)
    X = _dlt(uv[pa], P[ocam[pa]])
    # error of every hypothesis against every hip observation
    E = reprojection_errors(X, P[ocam], uv)                      # (H, n_obs)
    H = len(pairs)
    best_j = np.zeros((H, len(cams_with)), dtype=int)
    best_e = np.full((H, len(cams_with)), np.inf)
    for ci in range(len(cams_with)):
        m = np.nonzero(ocam == ci)[0]
        a = np.argmin(E[:, m], axis=1)
        best_j[:, ci] = m[a]
        best_e[:, ci] = E[np.arange(H), m[a]]
    inl = best_e < STAGE2_INLIER_PX
    support = inl.sum(axis=1)
    rows = np.arange(H)
    ok = (E[rows, pa[:, 0]] < STAGE2_INLIER_PX) & (E[rows, pa[:, 1]] < STAGE2_INLIER_PX) & (support >= MIN_SUPPORT)
    cands = []
    for h in np.nonzero(ok)[0]:
        members = {cams_with[ci]: int(best_j[h, ci]) for ci in np.nonzero(inl[h])[0]}
        cands.append((-int(support[h]), float(best_e[h][inl[h]].mean()), int(h), members))
    cands.sort(key=lambda c: (c[0], c[1], c[2]))
    claimed = set()
    accepted = []
    for _, err, h, members in cands:
        a, b = pairs[h]
        if a in claimed or b in claimed:
            continue
        free = {c: j for c, j in members.items() if j not in claimed}
        if len(free) < MIN_SUPPORT:
            continue
        claimed.update(free.values())
        accepted.append(Candidate(X[h], {c: obs[j][1] for c, j in free.items()}, err))
    return accepted


# ------------------------------------------------------------------ fusion


def fuse_joints(views, cameras: dict, rng):
    """Triangulate all joints from [(cam_id, Detection)]: RANSAC with >= 3 views, DLT with 2."""
    joints = np.zeros((N_JOINTS, 3))
    valid = np.zeros(N_JOINTS, dtype=bool)
    if len(views) < 2:
        return joints, valid
    cams = [cameras[c] for c, _ in views]
    P = projection_stack(cams)
    uv = np.stack([d.uv for _, d in views], axis=1)         # (65, V, 2)
    ok = np.stack([d.score for _, d in views], axis=1) > CONF_THRESHOLD
    for j in range(N_JOINTS):
        idx = np.nonzero(ok[j])[0]
        try:
            if len(idx) >= 3:
                joints[j], _ = triangulate_ransac(uv[j, idx], P[idx], rng=rng)
            elif len(idx) == 2:
                joints[j] = triangulate_dlt(uv[j, idx], P[idx])
            else:
                continue
        except (Degenerate, NoConsensus):
            continue
        valid[j] = True
    return joints, valid


def undistort_detection(cam: CameraModel, det: Detection) -> Detection:
    if not cam.has_distortion:
        return det
    xy = np.stack([(det.uv[:, 0] - cam.cx) / cam.fx, (det.uv[:, 1] - cam.cy) / cam.fy], axis=1)
    xy = undistort_normalized(xy, cam.dist)
    uv = np.stack([xy[:, 0] * cam.fx + cam.cx, xy[:, 1] * cam.fy + cam.cy], axis=1)
    return Detection(uv, det.score, det.bbox)


# ------------------------------------------------------------------ lifecycle


def update_lifecycle(tracks: dict, matched: dict, candidates: list, cache: ReIdCache, frame: int, next_id: int):
    """Advance track states for one frame.

    ``matched`` maps track id to its fused (joints, valid); ``candidates`` lists
    (joints, valid) for new people. Returns (tracks, cache, next_id).
    """
    cache.purge(frame)
    for tid in sorted(tracks):
        t = tracks[tid]
        if tid in matched:
            joints, valid = matched[tid]
            c_new = hip_midpoint(joints, valid)
            if c_new is None:
                c_new = joints[valid].mean(axis=0) if valid.any() else t.center()
            update_velocity(t, c_new, frame)
            t.joints = np.where(valid[:, None], joints, t.joints)
            t.valid = t.valid | valid
            t.n_miss = 0
            t.last_seen = frame
            if t.state == "tentative":
                t.hits += 1
                if t.hits >= CONFIRM_HITS:
                    t.state = "confirmed"
        elif t.state == "tentative":
            t.state = "pruned"
        else:
            t.n_miss += 1
            if t.n_miss >= PRUNE_MISSES:
                t.state = "pruned"
                cache.add(t.id, t.center(), frame)
    tracks = {k: t for k, t in tracks.items() if t.state != "pruned"}
    for joints, valid in candidates:
        t = PersonTrack(-1, joints, valid.copy(), last_seen=frame)
        old = cache.claim(t.center(), frame)
        if old is not None:
            t.id, t.state, t.hits = old, "confirmed", CONFIRM_HITS
        else:
            t.id = next_id
            next_id += 1
        tracks[t.id] = t
    return tracks, cache, next_id


class Tracker:
    """Frame-by-frame multi-person 3D tracker over calibrated cameras."""

    def __init__(self, cameras, seed: int = 0, fps: float = 30.0):
        self.cameras = {c.id: c for c in cameras}
        self.seed = seed
        self.fps = fps
        self.tracks: dict = {}
        self.cache = ReIdCache()
        self.next_id = 0
        self.smoothers: dict = {}
        self.last_output: dict = {}

    def step(self, frame: int, reports: dict) -> list:
        """Consume one promoted frame (camera id -> KeypointReport); return per-track records."""
        rng = stream(self.seed, "ransac", frame)
        dets = {cid: [undistort_detection(self.cameras[cid], d) for d in r.persons]
                for cid, r in sorted(reports.items()) if cid in self.cameras}
        active = [self.tracks[k] for k in sorted(self.tracks)]
        s1 = associate_stage1(active, dets, self.cameras)
        views: dict = {}
        used = set()
        for cid in sorted(s1):
            for tid, k in s1[cid]:
                views.setdefault(tid, []).append((cid, dets[cid][k]))
                used.add((cid, k))
        matched = {}
        for tid in sorted(views):
            joints, valid = fuse_joints(views[tid], self.cameras, rng)
            if valid.any():
                matched[tid] = (joints, valid)
        unmatched = {cid: [(k, d) for k, d in enumerate(ds) if (cid, k) not in used] for cid, ds in dets.items()}
        cands = []
        for cand in associate_stage2(unmatched, self.cameras):
            v = [(cid, dets[cid][k]) for cid, k in sorted(cand.members.items())]
            joints, valid = fuse_joints(v, self.cameras, rng)
            if valid.any():
                cands.append((joints, valid))
        self.tracks, self.cache, self.next_id = update_lifecycle(
            self.tracks, matched, cands, self.cache, frame, self.next_id
        )
        out = []
        for tid in sorted(self.tracks):
            t = self.tracks[tid]
            if t.state != "confirmed" or t.last_seen != frame:
                continue
            raw, valid = matched[tid] if tid in matched else (t.joints, t.valid)
            sm = self.smoothers.setdefault(tid, JointSmoother(N_JOINTS))
            prev = self.last_output.get(tid)
            dt = (frame - prev) / self.fps if prev is not None else 1.0 / self.fps
            if prev is not None and frame - prev > 1:
                sm.missed += frame - prev - 1
            smooth, svalid = sm(raw, valid, dt)
            self.last_output[tid] = frame
            out.append({"frame": frame, "track_id": tid, "raw": raw, "smoothed": smooth, "valid": svalid & valid})
        return out
