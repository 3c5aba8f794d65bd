"""Voxel visibility, coverage sweeps, camera ordering and triangulation-angle bounds."""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import frustum_mask
from .seeding import stream

D_MIN = 0.3
D_MAX = 8.0
M_VALUES = (1, 2, 4, 6, 10, 15)
N_SUBSETS = 25


@dataclass(frozen=True, eq=False)
class VisibilityMatrix:
    F: np.ndarray            # (C, V) bool
    camera_ids: tuple
    voxel_centers: np.ndarray
    resolution: float

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.F.shape != (len(self.camera_ids), len(self.voxel_centers)):
            raise ValueError("visibility matrix shape does not match cameras x voxels")


def voxelize(points, resolution: float = 0.01) -> np.ndarray:
    """Centers of occupied cells of the origin-aligned grid, sorted lexicographically."""
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(P) == 0:
        raise ValueError("empty point set")
    idx = np.unique(np.floor(P / resolution).astype(np.int64), axis=0)
    return (idx + 0.5) * resolution


def visibility_matrix(cameras, voxels, d_min: float = D_MIN, d_max: float = D_MAX, resolution: float = 0.01,
                      threads: int | None = None) -> VisibilityMatrix:
    V = np.asarray(voxels, dtype=float).reshape(-1, 3)
    threads = threads or int(os.environ.get("OMNIKIT_THREADS", "1") or 1)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(lambda c: frustum_mask(c, V, d_min, d_max), cameras))
    else:
        rows = [frustum_mask(c, V, d_min, d_max) for c in cameras]
    F = np.stack(rows) if rows else np.zeros((0, len(V)), dtype=bool)
    return VisibilityMatrix(F, tuple(c.id for c in cameras), V, resolution)


def _counts(F, subset):
    idx = np.asarray(sorted(subset), dtype=int)
    if idx.size == 0:
        return np.zeros(F.shape[1], dtype=int)
    return F[idx].sum(axis=0)


def coverage_fraction(vis, subset, M: int) -> float:
    """Fraction of voxels seen by at least M cameras of ``subset`` (row indices)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    F = vis.F if isinstance(vis, VisibilityMatrix) else np.asarray(vis, dtype=bool)
    if F.shape[1] == 0:
        return 0.0
    return float(np.mean(_counts(F, subset) >= M))


def coverage_sweep(vis, counts, n_subsets: int = N_SUBSETS, M_list=M_VALUES, seed: int = 0) -> dict:
    """Mean coverage over random camera subsets: {(count, M): mean}."""
    F = vis.F if isinstance(vis, VisibilityMatrix) else np.asarray(vis, dtype=bool)
    C = F.shape[0]
    out = {}
    for n in counts:
        if not 0 <= n <= C:
            raise ValueError(f"count {n} exceeds {C} cameras")
        rng = stream(seed, "coverage-subsets", n)
        subs = [np.arange(C)] if n == C else [rng.choice(C, n, replace=False) for _ in range(n_subsets)]
        cnt = np.stack([_counts(F, s) for s in subs])
        for M in M_list:
            out[(n, M)] = float(np.mean(cnt >= M, axis=1).mean())
    return out


def _min_pairwise(D, alive):
    idx = np.nonzero(alive)[0]
    if len(idx) < 2:
        return np.inf
    sub = D[np.ix_(idx, idx)]
    return float(sub[np.triu_indices(len(idx), 1)].min())


def farthest_point_order(camera_positions) -> list:
    """Greedy removal order: each step drops the camera whose removal leaves the largest
    minimum pairwise distance among the rest (ties to the lowest index)."""
    X = np.asarray(camera_positions, dtype=float)
    n = len(X)
    if n < 2:
        raise ValueError("need >= 2 cameras")
    D = np.linalg.norm(X[:, None] - X[None], axis=-1)
    alive = np.ones(n, dtype=bool)
    order = []
    while alive.sum() > 1:
        best, best_val = None, -np.inf
        for c in np.nonzero(alive)[0]:
            alive[c] = False
            v = _min_pairwise(D, alive)
            alive[c] = True
            if v > best_val:
                best, best_val = int(c), v
        order.append(best)
        alive[best] = False
    order.append(int(np.nonzero(alive)[0][0]))
    return order


def joint_visibility_and_bound(cameras, joint, d_min: float = D_MIN, d_max: float = D_MAX):
    """(number of cameras seeing the joint, 1/sin of the best ray-pair angle).

    The angle between two viewing rays is taken as the acute angle between the
    lines, so opposing cameras count as near-parallel.
    """
    X = np.asarray(joint, dtype=float).reshape(1, 3)
    vis = [c for c in cameras if frustum_mask(c, X, d_min, d_max)[0]]
    if len(vis) < 2:
        return len(vis), float("inf")
    rays = np.stack([X[0] - c.center for c in vis])
    rays /= np.linalg.norm(rays, axis=1, keepdims=True)
    best = 0.0
    for i, j in combinations(range(len(rays)), 2):
        theta = np.arccos(np.clip(abs(rays[i] @ rays[j]), 0.0, 1.0))
        best = max(best, np.sin(theta))
    return len(vis), (1.0 / best if best > 0 else float("inf"))
