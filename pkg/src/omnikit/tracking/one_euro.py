"""One Euro filter, scalar recursion plus a vectorized per-joint smoother."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

F_MIN = 1.0
BETA = 0.007
D_CUTOFF = 1.0
MAX_MISSED = 10


def smoothing_factor(dt, cutoff):
    tau = 1.0 / (2.0 * math.pi * cutoff)
    return 1.0 / (1.0 + tau / dt)


@dataclass
class OneEuroState:
    x: float = 0.0
    dx: float = 0.0
    initialized: bool = False
    missed: int = 0


def one_euro_step(state: OneEuroState, x: float, dt: float, f_min: float = F_MIN, beta: float = BETA,
                  d_cutoff: float = D_CUTOFF) -> float:
    """Filter one sample in place and return the filtered value."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not state.initialized or state.missed > MAX_MISSED:
        state.x, state.dx, state.initialized, state.missed = float(x), 0.0, True, 0
        return state.x
    state.missed = 0
    a_d = smoothing_factor(dt, d_cutoff)
    state.dx = a_d * (x - state.x) / dt + (1.0 - a_d) * state.dx
    a = smoothing_factor(dt, f_min + beta * abs(state.dx))
    state.x = a * x + (1.0 - a) * state.x
    return state.x


def one_euro_miss(state: OneEuroState) -> None:
    state.missed += 1


class JointSmoother:
    """Independent One Euro filters for every coordinate of a (J, 3) joint array.

    Works in millimetres so the speed coefficient acts on mm/s.
    """

    def __init__(self, n_joints: int, f_min: float = F_MIN, beta: float = BETA, d_cutoff: float = D_CUTOFF,
                 scale: float = 1000.0):
        self.f_min, self.beta, self.d_cutoff, self.scale = f_min, beta, d_cutoff, scale
        self.x = np.zeros((n_joints, 3))
        self.dx = np.zeros((n_joints, 3))
        self.init = np.zeros(n_joints, dtype=bool)
        self.missed = np.zeros(n_joints, dtype=int)

    def __call__(self, joints, valid, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        x = np.asarray(joints, dtype=float) * self.scale
        valid = np.asarray(valid, dtype=bool)
        fresh = valid & (~self.init | (self.missed > MAX_MISSED))
        run = valid & ~fresh
        self.x[fresh] = x[fresh]
        self.dx[fresh] = 0.0
        self.init[fresh] = True
        if run.any():
            a_d = smoothing_factor(dt, self.d_cutoff)
            dx = a_d * (x[run] - self.x[run]) / dt + (1.0 - a_d) * self.dx[run]
            tau = 1.0 / (2.0 * np.pi * (self.f_min + self.beta * np.abs(dx)))
            a = 1.0 / (1.0 + tau / dt)
            self.x[run] = a * x[run] + (1.0 - a) * self.x[run]
            self.dx[run] = dx
        self.missed[valid] = 0
        self.missed[~valid] += 1
        out = self.x / self.scale
        return out, valid & self.init
