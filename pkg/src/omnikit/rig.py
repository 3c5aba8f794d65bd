"""Synthetic room-scale camera rig shared by the tracking and coverage experiments."""

from __future__ import annotations

import numpy as np

from .geometry import CameraModel, look_at
from .seeding import stream

ROOM_X, ROOM_Y, ROOM_Z = 5.5, 4.2, 2.8


def room_rig(n_cameras: int = 48, seed: int = 0, heights=(2.5, 1.9, 1.2), margin: float = 0.15, fx: float = 1300.0) -> list:
    """Cameras spread along the walls on three height rings, each aimed at a random spot of the room."""
    rng = stream(seed, "room-rig")
    a, b = ROOM_X / 2 - margin, ROOM_Y / 2 - margin
    perim = 2 * (2 * a + 2 * b)
    cams = []
    for i in range(n_cameras):
        s = (i + 0.5) / n_cameras * perim + rng.uniform(-0.05, 0.05)
        eye = np.r_[_perimeter_point(s, a, b), heights[i % len(heights)] + rng.uniform(-0.05, 0.05)]
        target = rng.uniform([-0.35 * ROOM_X, -0.35 * ROOM_Y, 0.0], [0.35 * ROOM_X, 0.35 * ROOM_Y, 1.2])
        f = fx * rng.uniform(0.98, 1.02)
        dist = (rng.uniform(-0.05, -0.02), rng.uniform(0.0, 0.01), 0.0, 0.0, 0.0)
        cams.append(CameraModel.from_extrinsic(look_at(eye, target), fx=f, fy=f, cx=1024.0, cy=768.0, dist=dist, id=i))
    return cams


def _perimeter_point(s, a, b):
    """Walk the rectangle [-a, a] x [-b, b] counter-clockwise from (a, -b)."""
    edges = [((a, -b), (a, b)), ((a, b), (-a, b)), ((-a, b), (-a, -b)), ((-a, -b), (a, -b))]
    for p, q in edges:
        L = np.hypot(q[0] - p[0], q[1] - p[1])
        if s <= L:
            f = s / L
            return np.array([p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])])
        s -= L
    return np.array(edges[-1][1], dtype=float)


def room_cloud(seed: int = 0, spacing: float = 0.05) -> np.ndarray:
    """Floor, lower walls and a few furniture blocks, sampled on a jittered grid."""
    rng = stream(seed, "room-cloud")
    hx, hy = ROOM_X / 2 - 0.3, ROOM_Y / 2 - 0.3
    pts = []
    xs = np.arange(-hx, hx, spacing)
    ys = np.arange(-hy, hy, spacing)
    X, Y = np.meshgrid(xs, ys)
    pts.append(np.stack([X.ravel(), Y.ravel(), np.zeros(X.size)], axis=1))
    zs = np.arange(0.0, 2.4, spacing)
    for x in (-hx, hx):
        Yw, Zw = np.meshgrid(ys, zs)
        pts.append(np.stack([np.full(Yw.size, x), Yw.ravel(), Zw.ravel()], axis=1))
    for y in (-hy, hy):
        Xw, Zw = np.meshgrid(xs, zs)
        pts.append(np.stack([Xw.ravel(), np.full(Xw.size, y), Zw.ravel()], axis=1))
    # furniture: tables and shelves as filled boxes
    for lo, hi in [((-1.2, -0.6, 0.0), (-0.2, 0.2, 0.75)), ((0.6, 0.4, 0.0), (1.4, 1.0, 0.9)),
                   ((-0.3, 1.0, 0.0), (0.3, 1.4, 1.2))]:
        g = [np.arange(l, h + 1e-9, spacing) for l, h in zip(lo, hi)]
        B = np.stack(np.meshgrid(*g, indexing="ij"), axis=-1).reshape(-1, 3)
        pts.append(B)
    P = np.concatenate(pts)
    return P + rng.normal(0.0, spacing / 10, P.shape)
