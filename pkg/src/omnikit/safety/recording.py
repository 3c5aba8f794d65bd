"""Skeleton recordings: file formats, looping linear interpolation and a synthetic walker."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BadRecording, SchemaError
from ..fileio import atomic_write_text, csv_text, fmt, read_jsonl, write_jsonl
from ..seeding import stream
from ..tracking.skeleton import N_JOINTS
from ..tracking.synthetic import skeleton_template
from .geometry import BODY_JOINTS

FPS = 30.0
RECORDING_START = 21.0      # synthetic recordings start here, matching the default -21 s offset


@dataclass(eq=False)
class SkeletonRecording:
    times: np.ndarray        # (N,) seconds, strictly increasing
    joints: np.ndarray       # (N, 65, 3) meters
    valid: np.ndarray        # (N, 65) bool

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.joints = np.asarray(self.joints, float)
        self.valid = np.asarray(self.valid, bool)
        n = len(self.times)
        if self.joints.ndim != 3 or self.joints.shape[1:] != (N_JOINTS, 3):
            raise BadRecording(f"expected {N_JOINTS} joints per frame, got shape {self.joints.shape[1:]}")
        if self.joints.shape[0] != n or self.valid.shape != (n, N_JOINTS):
            raise BadRecording("times, joints and validity disagree in length")
        if n < 2 or np.any(np.diff(self.times) <= 0):
            raise BadRecording("need >= 2 frames with strictly increasing timestamps")

    @property
    def period(self) -> float:
        """Loop length: span plus one mean frame interval, so the wrap segment is a regular frame."""
        return float(self.times[-1] - self.times[0] + (self.times[-1] - self.times[0]) / (len(self.times) - 1))


def interpolate(rec: SkeletonRecording, t_rec):
    """Joints and validity at recording times ``t_rec``, looping past the last frame.

    A joint is valid when both bracketing frames are valid. At an original
    timestamp the weight of the next frame is exactly zero, so samples taken
    there reproduce the recording bit for bit.
    """
    t = np.atleast_1d(np.asarray(t_rec, float))
    T = rec.times
    tau = T[0] + np.mod(t - T[0], rec.period)
    i = np.searchsorted(T, tau, side="right") - 1
    i = np.clip(i, 0, len(T) - 1)
    nxt = (i + 1) % len(T)
    t_next = np.where(nxt == 0, T[0] + rec.period, T[nxt])
    w = (tau - T[i]) / (t_next - T[i])
    J0, J1 = rec.joints[i], rec.joints[nxt]
    J = J0 + w[:, None, None] * (J1 - J0)
    V = rec.valid[i] & (rec.valid[nxt] | (w == 0.0)[:, None])
    return J, V


def centers(J, V):
    """Per-sample (body center, hip midpoint); rows with no valid body joint are NaN."""
    m = V[:, :BODY_JOINTS]
    cnt = m.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (J[:, :BODY_JOINTS] * m[..., None]).sum(axis=1) / cnt[:, None]
    hip_ok = V[:, 11] & V[:, 12]
    hip = np.where(hip_ok[:, None], 0.5 * (J[:, 11] + J[:, 12]), c)
    return c, hip


# ---- file formats: one frame per row, timestamp then 65 x (x, y, z, valid)

def _row_values(t, J, V):
    vals = [fmt(t)]
    for p, v in zip(J, V):
        vals += [fmt(p[0]), fmt(p[1]), fmt(p[2]), "1" if v else "0"]
    return vals


def recording_header():
    cols = ["timestamp_s"]
    for j in range(N_JOINTS):
        cols += [f"j{j}_x", f"j{j}_y", f"j{j}_z", f"j{j}_valid"]
    return cols


def save_recording(path, rec: SkeletonRecording) -> None:
    path = str(path)
    if path.endswith(".csv"):
        rows = [_row_values(t, J, V) for t, J, V in zip(rec.times, rec.joints, rec.valid)]
        atomic_write_text(path, csv_text(recording_header(), rows))
    else:
        write_jsonl(path, (
            {"t": float(t), "joints": [[float(x), float(y), float(z), int(v)] for (x, y, z), v in zip(J, V)]}
            for t, J, V in zip(rec.times, rec.joints, rec.valid)
        ))


def load_recording(path) -> SkeletonRecording:
    path = str(path)
    times, joints, valid = [], [], []
    try:
        if path.endswith(".csv"):
            with open(path) as f:
                lines = f.read().splitlines()
            for ln, line in enumerate(lines[1:], start=2):
                vals = line.split(",")
                if len(vals) != 1 + 4 * N_JOINTS:
                    raise BadRecording(f"{path}:{ln}: expected {1 + 4 * N_JOINTS} columns, got {len(vals)}")
                a = np.array(vals[1:], float).reshape(N_JOINTS, 4)
                times.append(float(vals[0]))
                joints.append(a[:, :3])
                valid.append(a[:, 3] > 0.5)
        else:
            for ln, rec in enumerate(read_jsonl(path), start=1):
                a = np.asarray(rec["joints"], float)
                if a.shape != (N_JOINTS, 4):
                    raise BadRecording(f"{path}:{ln}: expected {N_JOINTS} x 4 joint entries, got {a.shape}")
                times.append(float(rec["t"]))
                joints.append(a[:, :3])
                valid.append(a[:, 3] > 0.5)
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"{path}: malformed recording ({e})") from e
    return SkeletonRecording(np.array(times), np.array(joints).reshape(-1, N_JOINTS, 3), np.array(valid).reshape(-1, N_JOINTS))


# ---- synthetic humans

# walkable floor in front of the workcell (x, y ranges, meters)
AREA_X = (-3.0, 3.0)
AREA_Y = (0.5, 4.0)
NEAR_Y = (0.5, 1.1)
CROSS_Y = 0.95
# where the wandering person heads next
WANDER_MIX = {"station": 0.55, "watch": 0.10, "reach": 0.03, "away": 0.32}


def _walk(a, b, speed):
    n = max(int(math.ceil(np.linalg.norm(b - a) / speed * FPS)), 1)
    s = np.arange(1, n + 1) / n
    return a + s[:, None] * (b - a)


def _linger(p, seconds, rng):
    n = max(int(seconds * FPS), 1)
    sway = np.cumsum(rng.normal(0, 0.003, (n, 2)), axis=0)
    return p + np.clip(sway, -0.05, 0.05)


def _wander_path(rng, duration):
    """Work at spots beside the pick and place stations, occasional visits up front, trips away."""
    pos = np.array([rng.uniform(*AREA_X), rng.uniform(2.5, AREA_Y[1])])
    pts = [pos[None]]
    n_total = 1
    while n_total < duration * FPS:
        kind = rng.choice(len(WANDER_MIX), p=list(WANDER_MIX.values()))
        if kind == 0:       # beside a station
            goal = np.array([rng.choice([-1.0, 1.0]) * rng.uniform(0.8, 1.1), rng.uniform(0.48, 0.58)])
            hold = rng.uniform(1.0, 6.0)
        elif kind == 1:     # watching the handover from a step back
            goal = np.array([rng.uniform(-0.4, 0.4), rng.uniform(0.9, 1.2)])
            hold = rng.uniform(0.5, 2.0)
        elif kind == 2:     # stepping up to the handover
            goal = np.array([rng.uniform(-0.2, 0.2), rng.uniform(0.5, 0.6)])
            hold = rng.uniform(3.0, 6.0)
        else:
            goal = np.array([rng.uniform(*AREA_X), rng.uniform(2.3, AREA_Y[1])])
            hold = rng.uniform(0.5, 4.0)
        speed = rng.uniform(0.5, 1.0)
        if pos[0] * goal[0] < 0 and max(pos[1], goal[1]) < CROSS_Y:
            # cross to the other side around the front of the arms
            seg = np.vstack([_walk(pos, np.array([pos[0], CROSS_Y]), speed),
                             _walk(np.array([pos[0], CROSS_Y]), np.array([goal[0], CROSS_Y]), speed),
                             _walk(np.array([goal[0], CROSS_Y]), goal, speed)])
        else:
            seg = _walk(pos, goal, speed)
        dwell = _linger(goal, hold, rng)
        pts += [seg, dwell]
        pos = dwell[-1]
        n_total += len(seg) + len(dwell)
    return np.vstack(pts)


def _adversarial_path(rng, duration, sector):
    """Fast dashes toward the workcell from one bearing sector; backs off the same way, then rests elsewhere."""
    C = np.array([0.0, 0.3])
    lo, hi = sector

    def at(bearing_deg, r):
        b = np.deg2rad(bearing_deg)
        return C + r * np.array([np.cos(b), np.sin(b)])

    pos = at(rng.uniform(lo, hi), 3.2)
    pts = [pos[None]]
    n_total = 1
    while n_total < duration * FPS:
        stop = at(rng.uniform(lo, hi), rng.uniform(0.25, 0.35))
        dash = _walk(pos, stop, rng.uniform(1.7, 2.1))
        hold = _linger(stop, rng.uniform(0.8, 1.6), rng)
        back_off = at(np.rad2deg(np.arctan2(*(hold[-1] - C)[::-1])), 1.8)
        out = at(rng.uniform(150.0, 170.0), 3.0)
        v_out = rng.uniform(0.8, 1.1)
        leave = np.vstack([_walk(hold[-1], back_off, rng.uniform(1.3, 1.6)), _walk(back_off, at(90.0, 2.6), v_out), _walk(at(90.0, 2.6), out, v_out)])
        rest = _linger(out, rng.uniform(40.0, 60.0), rng)
        back = at(rng.uniform(lo, hi), 3.2)
        ret = np.vstack([_walk(rest[-1], at(90.0, 2.6), 1.0), _walk(at(90.0, 2.6), back, 1.0)])
        for seg in (dash, hold, leave, rest, ret):
            pts.append(seg)
            n_total += len(seg)
        pos = ret[-1]
    return np.vstack(pts)


def generate_human(seed: int, duration: float = 120.0, pattern: str = "wander", sector=(10.0, 40.0),
                   dropout: float = 0.02, noise: float = 0.005) -> SkeletonRecording:
    """A 30 FPS recording of one person; timestamps start at 21 s."""
    rng = stream(seed, "human", pattern)
    if pattern == "wander":
        path = _wander_path(rng, duration)
    elif pattern == "adversarial":
        path = _adversarial_path(rng, duration, sector)
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    n = int(round(duration * FPS))
    path = path[:n]
    # face the direction of travel
    vel = np.gradient(path, axis=0)
    heading = np.unwrap(np.arctan2(vel[:, 1], vel[:, 0]))
    T = skeleton_template()
    c, s = np.cos(heading), np.sin(heading)
    R = np.zeros((n, 3, 3))
    R[:, 0, 0], R[:, 0, 1], R[:, 1, 0], R[:, 1, 1], R[:, 2, 2] = c, -s, s, c, 1.0
    J = np.einsum("nij,kj->nki", R, T)
    J[:, :, :2] += path[:, None, :]
    J += rng.normal(0.0, noise, J.shape)
    V = rng.random((n, N_JOINTS)) >= dropout
    times = RECORDING_START + np.arange(n) / FPS
    return SkeletonRecording(times, J, V)
