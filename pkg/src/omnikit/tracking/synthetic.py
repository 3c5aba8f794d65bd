"""Synthetic walkers and the per-camera keypoint reports they would produce."""

from __future__ import annotations

import numpy as np

from ..geometry import frustum_mask, project_points, rot_z
from ..seeding import stream
from .skeleton import LEFT_HAND, N_JOINTS, RIGHT_HAND, TORSO

FPS = 30.0
# body + feet joints of a standing person facing +x, hip midpoint at the origin of the floor plan
_BODY = np.array([
    [0.10, 0.00, 1.62],   # nose
    [0.08, 0.04, 1.66], [0.08, -0.04, 1.66],     # eyes
    [0.02, 0.08, 1.63], [0.02, -0.08, 1.63],     # ears
    [0.00, 0.19, 1.42], [0.00, -0.19, 1.42],     # shoulders
    [0.02, 0.23, 1.14], [0.02, -0.23, 1.14],     # elbows
    [0.06, 0.24, 0.88], [0.06, -0.24, 0.88],     # wrists
    [0.00, 0.11, 0.95], [0.00, -0.11, 0.95],     # hips
    [0.03, 0.11, 0.52], [0.03, -0.11, 0.52],     # knees
    [0.00, 0.11, 0.09], [0.00, -0.11, 0.09],     # ankles
    [0.18, 0.13, 0.02], [0.16, 0.15, 0.02], [-0.05, 0.11, 0.03],     # left big toe, small toe, heel
    [0.18, -0.13, 0.02], [0.16, -0.15, 0.02], [-0.05, -0.11, 0.03],  # right
])


def _hand(wrist, side):
    # 21 points: wrist then 5 fingers x 4 joints fanning forward and down
    pts = [wrist]
    for f in range(5):
        spread = (f - 2) * 0.018
        for k in range(1, 5):
            pts.append(wrist + np.array([0.02 + 0.02 * k * (1 - 0.1 * abs(f - 2)), side * spread, -0.03 - 0.015 * k]))
    return np.array(pts)


def skeleton_template() -> np.ndarray:
    J = np.zeros((N_JOINTS, 3))
    J[:23] = _BODY
    J[list(LEFT_HAND)] = _hand(_BODY[9], 1.0)
    J[list(RIGHT_HAND)] = _hand(_BODY[10], -1.0)
    return J


def walker_paths(n_people: int, n_frames: int, seed: int, fps: float = FPS):
    """(n_frames, n_people, 65, 3) joints of people looping on separate small circles."""
    rng = stream(seed, "walkers")
    centers = np.array([[-1.7, -0.8], [0.0, 0.8], [1.7, -0.8], [0.0, -1.2]])[:n_people]
    T = skeleton_template()
    t = np.arange(n_frames) / fps
    out = np.zeros((n_frames, n_people, N_JOINTS, 3))
    for p in range(n_people):
        r = rng.uniform(0.25, 0.35)
        speed = rng.uniform(0.8, 1.2)
        phase = rng.uniform(0, 2 * np.pi)
        sign = rng.choice([-1.0, 1.0])
        ang = phase + sign * speed / r * t
        for f in range(n_frames):
            pos = np.r_[centers[p] + r * np.array([np.cos(ang[f]), np.sin(ang[f])]), 0.0]
            heading = ang[f] + sign * np.pi / 2
            J = T @ rot_z(heading).T
            # arm and leg swing
            swing = 0.08 * np.sin(2 * np.pi * 1.8 * t[f] + p)
            fwd = np.array([np.cos(heading), np.sin(heading), 0.0])
            J[[7, 9] + list(LEFT_HAND)] += swing * fwd
            J[[8, 10] + list(RIGHT_HAND)] -= swing * fwd
            out[f, p] = J + pos
    return out


def make_reports(cameras, joints, seed: int, noise_px: float = 1.0, drop_rate: float = 0.02):
    """NDJSON-ready report records for every (frame, camera).

    Visible joints get scores with sqrt(s_x s_y) in (3.2, 9); hidden ones stay
    below 1.5. People whose torso is hidden in a view are not reported there.
    """
    rng = stream(seed, "reports")
    records = []
    n_frames, n_people = joints.shape[:2]
    for f in range(n_frames):
        for cam in cameras:
            if rng.random() < drop_rate:
                continue
            persons = []
            for p in rng.permutation(n_people):
                X = joints[f, p]
                vis = frustum_mask(cam, X, 0.3, 8.0)
                if vis[list(TORSO)].sum() < 2:
                    continue
                uv, _ = project_points(cam, X)
                uv = np.where(vis[:, None], uv + rng.normal(0.0, noise_px, uv.shape), 0.0)
                s = np.where(vis[:, None], rng.uniform(3.2, 9.0, (N_JOINTS, 2)), rng.uniform(0.05, 1.5, (N_JOINTS, 2)))
                kp = np.concatenate([uv, s], axis=1)
                lo, hi = uv[vis].min(axis=0), uv[vis].max(axis=0)
                persons.append({"bbox": [float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])],
                                "keypoints": kp.tolist()})
            records.append({"camera_id": cam.id, "frame": f, "persons": persons})
    return records


def evaluate(outputs, joints, min_frames: int = 1):
    """Mean raw joint error (m) over confirmed outputs and the number of identity swaps.

    Each output is matched to the nearest ground-truth person by hip midpoint; a
    swap is a track id whose nearest person changes, or a person whose track id
    changes after first assignment.
    """
    errs = []
    track_person: dict = {}
    person_track: dict = {}
    swaps = 0
    for rec in outputs:
        f = rec["frame"]
        raw = np.asarray(rec["raw"])
        valid = np.asarray(rec["valid"], dtype=bool)
        gt = joints[f]
        hip = raw[11:13].mean(axis=0)
        p = int(np.argmin(np.linalg.norm(gt[:, 11:13].mean(axis=1) - hip, axis=1)))
        errs.append(np.linalg.norm(raw[valid] - gt[p][valid], axis=1))
        tid = rec["track_id"]
        if track_person.setdefault(tid, p) != p:
            swaps += 1
            track_person[tid] = p
        if person_track.setdefault(p, tid) != tid:
            swaps += 1
            person_track[p] = tid
    mean = float(np.concatenate(errs).mean()) if errs else float("nan")
    return mean, swaps
