"""Independent reference computations shared by the unit and acceptance tests.

Written from the problem statements only, with plain loops, and not edited to
match library output.
"""

import itertools

import numpy as np

from omnikit.geometry import CameraModel, look_at


def dlt_point(uv, P):
    rows = []
    for (u, v), M in zip(uv, P):
        for r in (u * M[2] - M[0], v * M[2] - M[1]):
            rows.append(r / np.linalg.norm(r))
    X = np.linalg.svd(np.array(rows))[2][-1]
    return X[:3] / X[3]


def reprojection(X, P, uv):
    out = []
    for (u, v), M in zip(uv, P):
        x = M @ np.append(X, 1.0)
        out.append(np.inf if x[2] <= 0 else np.hypot(x[0] / x[2] - u, x[1] / x[2] - v))
    return np.array(out)


def exhaustive_consensus(uv, P, threshold=2.0):
    """All inlier sets reaching the largest size over every 3-view hypothesis."""
    by_size = {}
    for t in itertools.combinations(range(len(uv)), 3):
        X = dlt_point(uv[list(t)], P[list(t)])
        inl = tuple(int(i) for i in np.nonzero(reprojection(X, P, uv) < threshold)[0])
        by_size.setdefault(len(inl), set()).add(inl)
    return by_size[max(by_size)]


def triangulation_case(rng, max_views=8):
    """A point seen by 3..max_views ring cameras, some views shifted far off."""
    n = int(rng.integers(3, max_views + 1))
    X = rng.uniform([-1, -1, 0.5], [1, 1, 1.8])
    P = []
    for _ in range(n):
        a = rng.uniform(0, 2 * np.pi)
        eye = (4 * np.cos(a), 4 * np.sin(a), rng.uniform(1, 2.5))
        cam = CameraModel.from_extrinsic(look_at(eye, (0, 0, 1)), fx=1000, fy=1000, cx=1024, cy=768)
        P.append(cam.projection_matrix())
    P = np.stack(P)
    uv = np.array([(M @ np.append(X, 1))[:2] / (M @ np.append(X, 1))[2] for M in P])
    uv += rng.normal(0, 0.3, uv.shape)
    n_out = int(rng.integers(0, max(1, n - 2)))
    for k in rng.choice(n, n_out, replace=False):
        uv[k] += rng.uniform(30, 200, 2) * rng.choice([-1, 1], 2)
    return uv, P


def unique_consensus_cases(seed, count, max_views=8):
    rng = np.random.default_rng(seed)
    while count:
        uv, P = triangulation_case(rng, max_views)
        sets = exhaustive_consensus(uv, P)
        if len(sets) == 1 and len(next(iter(sets))) >= 2:
            count -= 1
            yield uv, P, list(next(iter(sets)))


def greedy_farthest_removal(X):
    """Brute force: at each step try every removal, keep the one maximizing the
    smallest remaining pairwise distance (lowest index on ties)."""
    X = [np.asarray(x, float) for x in X]
    alive = list(range(len(X)))
    order = []
    while len(alive) > 1:
        best, best_v = None, -np.inf
        for c in alive:
            rest = [i for i in alive if i != c]
            v = min((np.linalg.norm(X[i] - X[j]) for i, j in itertools.combinations(rest, 2)), default=np.inf)
            if v > best_v:
                best, best_v = c, v
        order.append(best)
        alive.remove(best)
    return order + alive
