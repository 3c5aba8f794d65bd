"""Levenberg-Marquardt with optional robust (IRLS) losses.

Residuals come in groups (2 for a pixel); the robust loss acts on each group's
squared norm. Damping starts at 1e-3 and moves by factors of 10.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..errors import Diverged, RankDeficient

LAMBDA0 = 1e-3
MAX_ITER = 200
REL_TOL = 1e-10


def robust_rho(s, loss: str | None, scale: float):
    """Loss value and derivative w.r.t. the squared norm ``s``."""
    if loss is None:
        return s, np.ones_like(s)
    c2 = scale * scale
    if loss == "cauchy":
        return c2 * np.log1p(s / c2), 1.0 / (1.0 + s / c2)
    if loss == "huber":
        r = np.sqrt(s)
        inlier = s <= c2
        rho = np.where(inlier, s, 2.0 * scale * r - c2)
        drho = np.where(inlier, 1.0, scale / np.maximum(r, 1e-300))
        return rho, drho
    raise ValueError(f"unknown loss {loss!r}")


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    initial_cost: float
    n_iter: int
    converged: bool
    history: list = field(default_factory=list)


def numeric_jacobian(fun, x, r0=None, eps=1e-7):
    r0 = fun(x) if r0 is None else r0
    J = np.empty((r0.size, x.size))
    for k in range(x.size):
        h = eps * max(1.0, abs(x[k]))
        xp = x.copy()
        xp[k] += h
        xm = x.copy()
        xm[k] -= h
        J[:, k] = (fun(xp) - fun(xm)) / (2 * h)
    return J


def levenberg_marquardt(
    fun,
    x0,
    jac=None,
    *,
    loss=None,
    loss_scale=1.0,
    group=1,
    update=None,
    lambda0=LAMBDA0,
    max_iter=MAX_ITER,
    rel_tol=REL_TOL,
) -> LMResult:
    x = np.array(x0, dtype=float)
    update = update or (lambda x, d: x + d)

    def cost_of(r):
        s = (r.reshape(-1, group) ** 2).sum(axis=1)
        rho, drho = robust_rho(s, loss, loss_scale)
        return float(rho.sum()), drho

    r = fun(x)
    cost, drho = cost_of(r)
    initial = cost
    history = [cost]
    lam = lambda0
    converged = False
    increases = 0
    it = 0
    for it in range(1, max_iter + 1):
        if cost == 0.0:
            converged = True
            break
        J = jac(x) if jac is not None else numeric_jacobian(fun, x, r)
        w = np.repeat(drho, group)
        if sparse.issparse(J):
            Jw = J.multiply(w[:, None]).tocsr()
            A = (J.T @ Jw).toarray()
            g = J.T @ (w * r)
        else:
            JtW = J.T * w
            A = JtW @ J
            g = JtW @ r
        diag = np.diag(A).copy()
        if np.any(diag <= 0.0):
            raise RankDeficient(f"{int(np.sum(diag <= 0))} parameters are unobserved")
        accepted = False
        while lam < 1e16:
            try:
                delta = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = update(x, delta)
            r_new = fun(x_new)
            cost_new, drho_new = cost_of(r_new)
            if not np.isfinite(cost_new):
                lam *= 10.0
                continue
            if cost_new < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged = True  # no descent direction left at machine precision
            break
        rel = (cost - cost_new) / cost
        if cost_new > history[-1]:
            increases += 1
            if increases >= 3:
                raise Diverged("objective increased on 3 consecutive accepted steps")
        else:
            increases = 0
        x, r, cost, drho = x_new, r_new, cost_new, drho_new
        history.append(cost)
        lam = max(lam / 10.0, 1e-12)
        if rel < rel_tol:
            converged = True
            break
    return LMResult(x, cost, initial, it, converged, history)
