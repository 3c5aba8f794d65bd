"""Velocity-level control barrier filter and a single-obstacle check loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import TCP_RADIUS, cylinder_normal, point_cylinder_distance

MARGIN = 0.05
INFLUENCE = 0.3
ALPHA = 2.0


def qp_cbf_step(qdot_ref, J, n_hat, h: float, alpha: float = ALPHA, bias: float = 0.0):
    """Closed-form min ||qd - qd_ref||^2 s.t. (J qd) . n >= -alpha h + bias.

    ``n_hat`` points from the human toward the TCP, so ``J qd . n`` is the
    separation rate. ``bias`` carries the obstacle's own velocity along n.
    Returns (qdot, infeasible).
    """
    qdot_ref = np.asarray(qdot_ref, dtype=float)
    a = np.asarray(J, dtype=float).T @ np.asarray(n_hat, dtype=float)
    lo = -alpha * h + bias
    s = float(a @ qdot_ref)
    if s >= lo:
        return qdot_ref, False
    aa = float(a @ a)
    if aa == 0.0:
        return np.zeros_like(qdot_ref), True
    return qdot_ref + ((lo - s) / aa) * a, False


@dataclass(frozen=True)
class CbfScenario:
    start: tuple = (-1.0, 0.0, 0.9)
    goal: tuple = (1.0, 0.0, 0.9)
    tcp_speed: float = 0.5           # nominal speed toward the goal
    max_speed: float = 1.0           # retreat cap
    human_start: tuple = (0.2, 1.0, 0.9)      # walks across the TCP path
    human_velocity: tuple = (0.0, -0.4, 0.0)
    duration: float = 8.0
    alpha: float = ALPHA
    margin: float = MARGIN
    influence: float = INFLUENCE


def simulate_cbf(sc: CbfScenario = CbfScenario()):
    """Point TCP (J = I) at 1 kHz steering to a goal past a walking human.

    Returns a dict with ``h`` at each 50 Hz check, the count of steps where
    the filter was inactive and whether each of those returned the reference
    unchanged.
    """
    dt = 1e-3
    n = int(round(sc.duration / dt))
    p = np.array(sc.start, float)
    c0 = np.array(sc.human_start, float)
    vh = np.array(sc.human_velocity, float)
    J = np.eye(3)
    h_checks, inactive, infeasible = [], 0, 0
    for k in range(n):
        c = c0 + vh * (k * dt)
        to_goal = np.asarray(sc.goal) - p
        dist_goal = np.linalg.norm(to_goal)
        ref = to_goal / dist_goal * min(sc.tcp_speed, dist_goal / dt) if dist_goal > 0 else np.zeros(3)
        d = point_cylinder_distance(p, c) - TCP_RADIUS
        h = d - sc.margin
        if k % 20 == 0:
            h_checks.append(h)
        if d < sc.influence:
            nrm = cylinder_normal(p, c)
            qd, bad = qp_cbf_step(ref, J, nrm, h, sc.alpha, bias=float(vh @ nrm))
            infeasible += bad
            if qd is ref:
                inactive += 1
        else:
            qd = ref
            inactive += 1
        sp = np.linalg.norm(qd)
        if sp > sc.max_speed:
            qd = qd * (sc.max_speed / sp)
        p = p + qd * dt
    return {"h": np.array(h_checks), "inactive_steps": inactive, "infeasible_steps": infeasible, "final": p}
