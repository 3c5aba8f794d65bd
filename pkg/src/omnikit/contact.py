"""Force-feedback kernels for contact-corrected picking and compliant handover."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientNormalForce

F_MIN = 2.0            # N, normal-force gate for the contact offset
V_CAP = 0.02           # m/s, compliance speed cap
MAX_DISPLACEMENT = 0.05
HYSTERESIS_CYCLES = 5


@dataclass(frozen=True)
class Wrench:
    force: tuple = (0.0, 0.0, 0.0)
    torque: tuple = (0.0, 0.0, 0.0)
    frame: str = "K"

    def __post_init__(self):
        f = tuple(float(v) for v in self.force)
        t = tuple(float(v) for v in self.torque)
        if not all(math.isfinite(v) for v in f + t):
            raise ValueError("wrench must be finite")
        object.__setattr__(self, "force", f)
        object.__setattr__(self, "torque", t)

    def vector(self) -> np.ndarray:
        return np.array(self.force + self.torque)


def shift_torque_to_ee(w: Wrench, r_ee_to_k) -> np.ndarray:
    """Torque about the end-effector origin from a wrench measured in the stiffness frame."""
    return np.asarray(w.torque) - np.cross(np.asarray(r_ee_to_k, dtype=float), np.asarray(w.force))


@dataclass
class EmaState:
    value: np.ndarray = field(default_factory=lambda: np.zeros(6))


def ema_wrench(state: EmaState, w: Wrench, baseline: Wrench, alpha: float) -> Wrench:
    """Baseline-subtracted exponential smoothing over all six axes (state updated in place)."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    state.value = alpha * (w.vector() - baseline.vector()) + (1.0 - alpha) * state.value
    return Wrench(tuple(state.value[:3]), tuple(state.value[3:]), w.frame)


def contact_offset(force, torque, f_min: float = F_MIN) -> tuple[float, float]:
    """(x, y) of the contact point relative to the fingertip center, assuming a vertical load."""
    fz = abs(float(force[2]))
    if fz <= f_min:
        raise InsufficientNormalForce(f"|F_z| = {fz} N is not above {f_min} N")
    return -float(torque[1]) / fz, -float(torque[0]) / fz


def descent_velocity(t: float, v_d: float, t_acc: float, t_s: float, t_dec: float) -> float:
    """Downward speed: linear ramp-in to -v_d, hold, then linear ramp-out starting at t_s."""
    if t_acc <= 0 or t_dec <= 0:
        raise ValueError("ramp durations must be positive")
    if t < t_s:
        return -v_d * min(1.0, max(t, 0.0) / t_acc)
    return -v_d * max(0.0, 1.0 - (t - t_s) / t_dec)


def admittance_velocity(F_y: float, e_pos_y: float, K_adm: float, K_p: float, F_thresh: float,
                        v_cap: float = V_CAP) -> float:
    """Yield against lateral force above the dead-band, otherwise servo back to the reference.

    The output jumps at |F_y| = F_thresh, where the law switches branch.
    """
    if K_adm <= 0 or K_p <= 0:
        raise ValueError("gains must be positive")
    v = -K_adm * F_y if abs(F_y) > F_thresh else K_p * e_pos_y
    return float(np.clip(v, -v_cap, v_cap))


def rate_limit(v_new, v_prev, a_lim: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_new = np.asarray(v_new, dtype=float)
    v_prev = np.asarray(v_prev, dtype=float)
    step = a_lim * dt
    return v_prev + np.clip(v_new - v_prev, -step, step)


@dataclass
class SideClassifier:
    """Left/right contact label that only switches after N agreeing cycles in a row."""

    cycles: int = HYSTERESIS_CYCLES
    label: str | None = None
    _pending: str | None = None
    _count: int = 0

    def update(self, y_est: float) -> str | None:
        obs = "left" if y_est > 0 else "right"
        if self.label is None:
            self.label = obs
        elif obs == self.label:
            self._pending, self._count = None, 0
        else:
            if obs == self._pending:
                self._count += 1
            else:
                self._pending, self._count = obs, 1
            if self._count >= self.cycles:
                self.label, self._pending, self._count = obs, None, 0
        return self.label


@dataclass
class ComplianceTracker:
    """Accumulates compliant displacement; leaves compliance once it exceeds the limit."""

    limit: float = MAX_DISPLACEMENT
    displacement: float = 0.0
    active: bool = True

    def step(self, v_y: float, dt: float) -> bool:
        if self.active:
            self.displacement += v_y * dt
            if abs(self.displacement) > self.limit:
                self.active = False
        return self.active
