"""Trigger policies, bearing-binned behavior memory and velocity prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError

KINDS = ("non_aware", "static", "dynamic", "dynamic_learned")
N_BINS = 12
BIN_WIDTH = 2 * math.pi / N_BINS


@dataclass(frozen=True)
class MemoryConfig:
    zone: float = 2.0
    hysteresis: float = 1.2
    timeout: float = 30.0
    intrusion_dist: float = 0.3
    boost: float = 0.8
    min_bin_episodes: float = 2.0
    warmup_episodes: int = 3
    decay_every: int = 20
    decay: float = 0.95
    ema_alpha: float = 0.15
    horizon: float = 0.5


@dataclass(frozen=True)
class PolicyConfig:
    kind: str = "non_aware"
    r: float = 0.5
    H: float = 2.0
    r_base: float = 0.6
    k: float = 0.6
    r_min: float = 0.3
    r_max: float = 0.6
    memory: MemoryConfig = field(default_factory=MemoryConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"policy kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind.startswith("dynamic") and not self.r_min <= self.r_base <= self.r_max:
            raise ConfigError("dynamic policy needs r_min <= r_base <= r_max")

    @property
    def label(self) -> str:
        if self.kind == "static":
            return f"static_r{self.r:g}"
        return self.kind

    @classmethod
    def from_dict(cls, d: dict) -> PolicyConfig:
        d = dict(d)
        mem = MemoryConfig(**d.pop("memory", {}))
        try:
            return cls(memory=mem, **d)
        except TypeError as e:
            raise ConfigError(f"bad policy config: {e}") from e


def static_trigger(h, tcps, r: float, H: float) -> bool:
    for p in tcps:
        if math.hypot(h[0] - p[0], h[1] - p[1]) < r and abs(h[2] - p[2]) <= H / 2:
            return True
    return False


def approach_direction(h, C):
    dx, dy = h[0] - C[0], h[1] - C[1]
    n = math.hypot(dx, dy)
    if n < 1e-12:
        return 0.0, 0.0, 0.0
    return dx / n, dy / n, n


def dynamic_region(h, C, v_app: float, r_base, k, r_min, r_max, gain: float = 1.0):
    """(trigger, shifted center xy, radius).

    ``gain`` scales the trigger radius after the center shift, so a boosted
    region reaches further toward the human without also moving its center.
    """
    dx, dy, _ = approach_direction(h, C)
    R = min(max(r_base + k * v_app, r_min), r_max)
    s = max(0.0, R - r_base)
    cx, cy = C[0] + s * dx, C[1] + s * dy
    R *= gain
    return math.hypot(h[0] - cx, h[1] - cy) < R, (cx, cy), R


def bearing(h, C) -> float:
    return math.atan2(h[1] - C[1], h[0] - C[0]) % (2 * math.pi)


def bearing_bin(theta: float) -> int:
    return int(math.floor((theta % (2 * math.pi)) / BIN_WIDTH + 1e-12)) % N_BINS


@dataclass
class BehaviorMemory:
    config: MemoryConfig = field(default_factory=MemoryConfig)
    n_intr: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS))
    n_pass: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS))
    inside: bool = False
    min_dist: float = math.inf
    start_time: float = 0.0
    start_bin: int = 0
    total_episodes: int = 0

    @property
    def learned(self) -> bool:
        return self.total_episodes >= self.config.warmup_episodes

    def ratio(self, b: int) -> float:
        n = self.n_intr[b] + self.n_pass[b]
        return float(self.n_intr[b] / n) if n > 0 else 0.0

    def active(self, b: int) -> bool:
        return self.n_intr[b] + self.n_pass[b] >= self.config.min_bin_episodes

    def record_episode(self, b: int, intrusion: bool) -> None:
        counts = self.n_intr if intrusion else self.n_pass
        for j in (b - 1, b, b + 1):
            counts[j % N_BINS] += 1.0
        self.total_episodes += 1
        if self.total_episodes % self.config.decay_every == 0:
            self.n_intr *= self.config.decay
            self.n_pass *= self.config.decay

    def copy(self) -> BehaviorMemory:
        return replace(self, n_intr=self.n_intr.copy(), n_pass=self.n_pass.copy())


def update_behavior_memory(memory: BehaviorMemory, h, C, tcp_dist: float, t: float):
    """Advance the episode state by one observation; returns (memory, finished episode or None).

    An episode opens when the human center enters the zone around ``C`` and
    closes when it leaves the hysteresis-widened zone or times out. The bin
    is fixed by the bearing at entry.
    """
    cfg = memory.config
    d = math.hypot(h[0] - C[0], h[1] - C[1])
    done = None
    if memory.inside:
        memory.min_dist = min(memory.min_dist, tcp_dist)
        if d > cfg.zone * cfg.hysteresis or t - memory.start_time >= cfg.timeout:
            intrusion = memory.min_dist < cfg.intrusion_dist
            memory.record_episode(memory.start_bin, intrusion)
            done = (memory.start_bin, intrusion, t)
            memory.inside = False
            memory.min_dist = math.inf
    elif d < cfg.zone:
        memory.inside = True
        memory.start_time = t
        memory.start_bin = bearing_bin(bearing(h, C))
        memory.min_dist = tcp_dist
    return memory, done


def modulated_radius(memory: BehaviorMemory, theta: float, base_radius: float) -> float:
    """Base radius boosted by up to ``boost`` along high-intrusion bearings; never shrinks."""
    b = bearing_bin(theta)
    if not memory.learned or not memory.active(b):
        return base_radius
    return base_radius * (1.0 + memory.config.boost * memory.ratio(b))


@dataclass
class VelocityEstimator:
    """EMA of finite-difference velocity plus a constant-acceleration extrapolation."""

    alpha: float = 0.15
    horizon: float = 0.5
    last: tuple | None = None
    raw: tuple = (0.0, 0.0)          # latest finite-difference velocity
    ema: tuple | None = None
    accel: tuple = (0.0, 0.0)

    def update(self, p, dt: float) -> None:
        if self.last is not None:
            v = ((p[0] - self.last[0]) / dt, (p[1] - self.last[1]) / dt)
            self.raw = v
            if self.ema is None:
                self.ema = v
            else:
                a = self.alpha
                new = (a * v[0] + (1 - a) * self.ema[0], a * v[1] + (1 - a) * self.ema[1])
                self.accel = ((new[0] - self.ema[0]) / dt, (new[1] - self.ema[1]) / dt)
                self.ema = new
        self.last = (p[0], p[1])

    @property
    def predicted(self) -> tuple:
        e = self.ema or (0.0, 0.0)
        h = 0.5 * self.horizon
        return (e[0] + h * self.accel[0], e[1] + h * self.accel[1])

    def effective(self, direction=None) -> float:
        """max(v_raw, v_pred): approach components along ``-direction`` if given, else speeds."""
        e, p = self.ema or (0.0, 0.0), self.predicted
        if direction is None:
            return max(math.hypot(*e), math.hypot(*p))
        dx, dy = direction
        return max(-(e[0] * dx + e[1] * dy), -(p[0] * dx + p[1] * dy))


def effective_velocity(times, positions, horizon: float = 0.5, alpha: float = 0.15, direction=None) -> float:
    """Replay a position history (>= 2 samples) through the estimator."""
    times = np.asarray(times, float)
    P = np.asarray(positions, float)
    if len(times) < 2:
        raise ValueError("need >= 2 samples")
    est = VelocityEstimator(alpha, horizon)
    est.update(P[0], 1.0)
    for k in range(1, len(times)):
        est.update(P[k], times[k] - times[k - 1])
    return est.effective(direction)
