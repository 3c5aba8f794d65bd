"""DLT triangulation and 3-view RANSAC over undistorted pixels."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from ..errors import Degenerate, NoConsensus
from ..geometry import CameraModel

# rays count as parallel when 1 - cos(angle) <= this (about 0.08 deg)
PARALLEL_TOL = 1e-6
RANSAC_THRESHOLD_PX = 2.0
RANSAC_ITERS = 30
MIN_SAMPLE = 3
# up to this many views every 3-subset is scored (56 at most), so the result is
# the exhaustive best consensus; beyond it RANSAC_ITERS subsets are drawn
EXHAUSTIVE_MAX_VIEWS = 8


def projection_stack(cameras) -> np.ndarray:
    """(N, 3, 4) projection matrices from CameraModels or raw 3x4 arrays."""
    return np.stack([c.projection_matrix() if isinstance(c, CameraModel) else np.asarray(c, float) for c in cameras])


def _dlt(uv, P):
    """Batched DLT: uv (..., k, 2), P (..., k, 3, 4) -> (..., 3)."""
    A = np.concatenate([uv[..., 0:1] * P[..., 2, :] - P[..., 0, :], uv[..., 1:2] * P[..., 2, :] - P[..., 1, :]], axis=-2)
    # row-normalize for conditioning
    A = A / np.linalg.norm(A, axis=-1, keepdims=True)
    _, _, Vt = np.linalg.svd(A)
    Xh = Vt[..., -1, :]
    # points at infinity come out non-finite and fail every reprojection check
    with np.errstate(divide="ignore", invalid="ignore"):
        return Xh[..., :3] / Xh[..., 3:4]


def ray_directions(uv, P) -> np.ndarray:
    M = P[:, :, :3]
    d = np.linalg.solve(M, np.concatenate([uv, np.ones((len(uv), 1))], axis=1)[..., None])[..., 0]
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _all_parallel(dirs) -> bool:
    c = np.abs(dirs @ dirs.T)
    return bool(np.all(1.0 - c <= PARALLEL_TOL))


def reprojection_errors(X, P, uv) -> np.ndarray:
    """(B, N) pixel errors of B points in N views; inf where the point is behind a view."""
    X = np.atleast_2d(X)
    Xh = np.concatenate([X, np.ones((len(X), 1))], axis=1)
    proj = np.einsum("nij,bj->bni", P, Xh)
    z = proj[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.linalg.norm(proj[..., :2] / z[..., None] - uv[None], axis=-1)
    return np.where(z > 0, e, np.inf)


def triangulate_dlt(pixels, cameras) -> np.ndarray:
    """Least-squares point from >= 2 undistorted pixel observations."""
    uv = np.asarray(pixels, dtype=float).reshape(-1, 2)
    P = projection_stack(cameras)
    if len(uv) < 2:
        raise Degenerate("need >= 2 views")
    if _all_parallel(ray_directions(uv, P)):
        raise Degenerate("viewing rays are parallel")
    return _dlt(uv, P)


@lru_cache(maxsize=64)
def _all_triples(n: int) -> np.ndarray:
    t = np.array(list(combinations(range(n), MIN_SAMPLE)), dtype=int)
    t.flags.writeable = False
    return t


def triangulate_ransac(pixels, cameras, threshold_px: float = RANSAC_THRESHOLD_PX, max_iters: int = RANSAC_ITERS,
                       rng=None):
    """Best 3-view consensus, refit by DLT on its inliers. Returns (point, sorted inlier indices).

    Hypotheses are distinct 3-subsets drawn without replacement; with at most
    ``EXHAUSTIVE_MAX_VIEWS`` views, or no more subsets than ``max_iters``, every
    subset is scored. Ties in inlier count go to the
    lower summed inlier error, then to the earlier draw.
    """
    uv = np.asarray(pixels, dtype=float).reshape(-1, 2)
    P = projection_stack(cameras)
    n = len(uv)
    if n < MIN_SAMPLE:
        raise NoConsensus(f"need >= {MIN_SAMPLE} views, got {n}")
    triples = _all_triples(n)
    if n > EXHAUSTIVE_MAX_VIEWS and len(triples) > max_iters:
        rng = rng if rng is not None else np.random.default_rng(0)
        triples = triples[np.sort(rng.choice(len(triples), max_iters, replace=False))]
    dirs = ray_directions(uv, P)
    cosines = np.abs(dirs @ dirs.T)
    t = triples
    ok = ~((1 - cosines[t[:, 0], t[:, 1]] <= PARALLEL_TOL) & (1 - cosines[t[:, 0], t[:, 2]] <= PARALLEL_TOL)
           & (1 - cosines[t[:, 1], t[:, 2]] <= PARALLEL_TOL))
    triples = triples[ok]
    if len(triples) == 0:
        raise NoConsensus("all samples degenerate")
    X = _dlt(uv[triples], P[triples])
    err = reprojection_errors(X, P, uv)
    inl = err < threshold_px
    count = inl.sum(axis=1)
    score = np.where(inl, err, 0.0).sum(axis=1)
    best = int(np.lexsort((np.arange(len(count)), score, -count))[0])
    inliers = np.nonzero(inl[best])[0]
    if len(inliers) < 2:
        raise NoConsensus("fewer than 2 views agree")
    point = _dlt(uv[inliers], P[inliers])
    return point, inliers
