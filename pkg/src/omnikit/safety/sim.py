"""Replay simulator for a bimanual pick-handover-place task against a recorded human.

The clock has 1 ms resolution. Trigger policies and collision checks run
every 20 ticks (50 Hz); between checks the scripted TCP motion is
piecewise-linear at constant speed, so it is advanced event by event instead
of tick by tick, which gives the same positions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import ConfigError, SchemaError
from ..fileio import read_json, write_csv, write_json
from ..seeding import stream
from .geometry import HUMAN_HEIGHT, HUMAN_RADIUS, TCP_RADIUS, point_cylinder_distance
from .policy import (
    BehaviorMemory, PolicyConfig, VelocityEstimator, approach_direction, bearing, dynamic_region,
    modulated_radius, static_trigger, update_behavior_memory,
)
from .recording import SkeletonRecording, centers, generate_human, interpolate, load_recording

TICK = 1e-3
CHECK_TICKS = 20
DT_CHECK = TICK * CHECK_TICKS


# ---- task script

@dataclass(frozen=True)
class Step:
    kind: str                   # move | dwell | sync
    target: tuple = ()          # move
    speed: float = 0.0          # move, m/s
    duration: float = 0.0       # dwell, s
    exchange: bool = False      # dwell: triggers are blocked while running
    deliver: bool = False       # dwell: completes an item when it ends
    name: str = ""              # sync barrier name

    @classmethod
    def from_dict(cls, d: dict) -> Step:
        if "move" in d:
            return cls("move", target=tuple(float(v) for v in d["move"]), speed=float(d["speed"]))
        if "dwell" in d:
            return cls("dwell", duration=float(d["dwell"]), exchange=bool(d.get("exchange", False)),
                       deliver=bool(d.get("deliver", False)))
        if "sync" in d:
            return cls("sync", name=str(d["sync"]))
        raise SchemaError(f"unknown step {d}")

    def to_dict(self) -> dict:
        if self.kind == "move":
            return {"move": list(self.target), "speed": self.speed}
        if self.kind == "dwell":
            return {"dwell": self.duration, "exchange": self.exchange, "deliver": self.deliver}
        return {"sync": self.name}


def _mv(x, y, z, v):
    return Step("move", target=(x, y, z), speed=v)


HANDOVER_CENTER = (0.0, 0.3, 0.65)
PICK = (-0.9, 0.0, 0.35)
PLACE = (0.9, 0.0, 0.35)


def default_scripts(speed: float = 0.22):
    """Giver picks on the left and hands over at the center; receiver places on the right."""
    v, slow = speed, 0.5 * speed
    hx, hy, hz = HANDOVER_CENTER
    giver = [
        _mv(PICK[0], PICK[1], PICK[2] + 0.2, v),
        _mv(*PICK, slow),
        Step("dwell", duration=1.0),
        _mv(PICK[0], PICK[1], PICK[2] + 0.2, slow),
        _mv(hx - 0.12, hy, hz, v),
        Step("sync", name="A"),
        _mv(hx - 0.04, hy, hz, slow),
        Step("sync", name="B"),
        Step("dwell", duration=1.0, exchange=True),
        _mv(hx - 0.12, hy, hz, slow),
    ]
    receiver = [
        _mv(hx + 0.12, hy, hz, v),
        Step("sync", name="A"),
        _mv(hx + 0.04, hy, hz, slow),
        Step("sync", name="B"),
        Step("dwell", duration=1.0, exchange=True),
        _mv(hx + 0.12, hy, hz, slow),
        _mv(PLACE[0], PLACE[1], PLACE[2] + 0.2, v),
        _mv(*PLACE, slow),
        Step("dwell", duration=1.0, deliver=True),
        _mv(PLACE[0], PLACE[1], PLACE[2] + 0.2, slow),
    ]
    return giver, receiver


@dataclass(frozen=True)
class ArmSpec:
    name: str
    home: tuple
    fallback: tuple
    script: tuple

    @classmethod
    def from_dict(cls, d: dict) -> ArmSpec:
        try:
            return cls(str(d["name"]), tuple(map(float, d["home"])), tuple(map(float, d["fallback"])),
                       tuple(Step.from_dict(s) for s in d["script"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"bad arm spec: {e}") from e

    def to_dict(self) -> dict:
        return {"name": self.name, "home": list(self.home), "fallback": list(self.fallback),
                "script": [s.to_dict() for s in self.script]}


def default_arms():
    g, r = default_scripts()
    return (
        ArmSpec("giver", (-0.45, -0.1, 0.65), (-0.35, -0.3, 0.6), tuple(g)),
        ArmSpec("receiver", (0.45, -0.1, 0.65), (0.35, -0.3, 0.6), tuple(r)),
    )


# ---- scenario

@dataclass(frozen=True)
class SimScenario:
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    recording: str | None = None                 # path; None means the synthetic generator
    human: dict = field(default_factory=lambda: {"pattern": "wander", "duration": 300.0})
    time_offset: float = -21.0
    arms: tuple = field(default_factory=default_arms)
    handover_center: tuple = HANDOVER_CENTER
    n_items: int = 12
    trial_duration: float = 1800.0
    fallback_speed: float = 1.0
    resume_after: float = 0.5
    seed: int = 0
    freeze_at: float | None = None               # seconds; behavior memory stops updating here

    def with_policy(self, policy: PolicyConfig) -> SimScenario:
        return replace(self, policy=policy)

    def to_dict(self) -> dict:
        d = {
            "policy": asdict(self.policy),
            "recording": self.recording,
            "human": dict(self.human),
            "time_offset": self.time_offset,
            "arms": [a.to_dict() for a in self.arms],
            "handover_center": list(self.handover_center),
            "n_items": self.n_items,
            "trial_duration": self.trial_duration,
            "fallback_speed": self.fallback_speed,
            "resume_after": self.resume_after,
            "seed": self.seed,
        }
        if self.freeze_at is not None:
            d["freeze_at"] = self.freeze_at
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SimScenario:
        d = dict(d)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise SchemaError(f"unknown scenario keys: {sorted(unknown)}")
        try:
            if "policy" in d:
                d["policy"] = PolicyConfig.from_dict(d["policy"])
            if "arms" in d:
                d["arms"] = tuple(ArmSpec.from_dict(a) for a in d["arms"])
            if "handover_center" in d:
                d["handover_center"] = tuple(map(float, d["handover_center"]))
            sc = cls(**d)
        except (TypeError, ValueError) as e:
            raise SchemaError(f"bad scenario: {e}") from e
        if len(sc.arms) != 2:
            raise ConfigError("scenario needs exactly two arms")
        if sc.n_items < 1 or sc.trial_duration <= 0:
            raise ConfigError("n_items and trial_duration must be positive")
        return sc


@dataclass
class SimMetrics:
    policy: str
    avg_cycle_s: float
    human_hits: int
    triggers: int
    fallback_s: float
    items: int
    completed: bool
    completion_s: float
    warmup_s: float | None = None     # learned policy: time the memory entered learned mode
    seed: int = 0

    def row(self):
        return [self.policy, self.seed, self.avg_cycle_s, self.human_hits, self.triggers, self.fallback_s, self.items,
                int(self.completed)]


METRIC_COLUMNS = ["policy", "seed", "avg_cycle_s", "human_hits", "triggers", "fallback_s", "items", "completed"]


# ---- arms

class _Arm:
    __slots__ = ("spec", "pos", "idx", "elapsed", "anchor", "sync_count", "returning", "cycles")

    def __init__(self, spec: ArmSpec):
        self.spec = spec
        self.pos = list(spec.home)
        self.idx = 0
        self.elapsed = 0.0          # dwell progress
        self.anchor = None          # where a dwell/sync step must be executed
        self.sync_count = {}
        self.returning = False      # moving back to the anchor after a fallback
        self.cycles = 0

    @property
    def step(self) -> Step:
        return self.spec.script[self.idx]

    def in_exchange(self) -> bool:
        s = self.step
        return s.kind == "dwell" and s.exchange and self.anchor is not None and not self.returning

    def advance_index(self):
        self.idx += 1
        if self.idx == len(self.spec.script):
            self.idx = 0
            self.cycles += 1
        self.elapsed = 0.0
        self.anchor = None
        self.returning = False


def _dist(a, b):
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _move_toward(pos, target, speed, dt):
    """Move at ``speed`` for up to ``dt``; returns time used (< dt means arrived)."""
    d = _dist(pos, target)
    if d <= speed * dt:
        pos[:] = target
        return d / speed if speed > 0 else 0.0
    f = speed * dt / d
    for i in range(3):
        pos[i] += f * (target[i] - pos[i])
    return dt


class _Task:
    """Both arms executing their scripts, advanced by events within a check interval."""

    def __init__(self, arms, resume_speed):
        self.arms = [_Arm(a) for a in arms]
        self.resume_speed = resume_speed
        self.delivered = 0
        self.deliver_times = []

    def _ready_sync(self, i):
        a, b = self.arms[i], self.arms[1 - i]
        name = a.step.name
        return b.sync_count.get(name, 0) >= a.sync_count[name]

    def _enter(self, arm):
        s = arm.step
        if s.kind in ("dwell", "sync") and arm.anchor is None:
            arm.anchor = tuple(arm.pos)
            if s.kind == "sync":
                arm.sync_count[s.name] = arm.sync_count.get(s.name, 0) + 1

    def run(self, t0, dt):
        """Advance both arms from t0 by dt; returns list of delivery times inside the interval."""
        t, end = t0, t0 + dt
        for a in self.arms:
            self._enter(a)
        guard = 0
        while t < end - 1e-12:
            guard += 1
            if guard > 10000:
                raise RuntimeError("task script does not advance")
            # time until each arm's next event
            waits = []
            for i, a in enumerate(self.arms):
                s = a.step
                if a.returning:
                    waits.append(_dist(a.pos, a.anchor) / self.resume_speed)
                elif s.kind == "move":
                    waits.append(_dist(a.pos, s.target) / s.speed)
                elif s.kind == "dwell":
                    waits.append(s.duration - a.elapsed)
                else:
                    waits.append(0.0 if self._ready_sync(i) else math.inf)
            h = min(min(waits), end - t)
            for i, a in enumerate(self.arms):
                s = a.step
                if a.returning:
                    _move_toward(a.pos, a.anchor, self.resume_speed, h)
                elif s.kind == "move":
                    _move_toward(a.pos, s.target, s.speed, h)
                elif s.kind == "dwell":
                    a.elapsed += h
            t += h
            for i, a in enumerate(self.arms):
                if waits[i] - h > 1e-12:
                    continue
                s = a.step
                if a.returning:
                    a.returning = False
                    a.pos[:] = a.anchor
                    continue
                if s.kind == "dwell" and s.deliver:
                    self.delivered += 1
                    self.deliver_times.append(t)
                if s.kind == "sync" and not self._ready_sync(i):
                    continue
                a.advance_index()
                self._enter(a)
        return t

    def interrupt(self):
        for a in self.arms:
            if a.step.kind == "dwell":
                a.elapsed = 0.0     # an interrupted grasp or release restarts from scratch

    def resume(self):
        for a in self.arms:
            if a.anchor is not None and _dist(a.pos, a.anchor) > 1e-12:
                a.returning = True


# ---- human samples

def human_track(sc: SimScenario, n_checks: int):
    """Body centers and hip midpoints at every check instant, plus the recording used."""
    if sc.recording is not None:
        rec = load_recording(sc.recording)
    else:
        spec = dict(sc.human)
        rec = generate_human(sc.seed, **spec)
    t_sim = np.arange(n_checks) * DT_CHECK
    J, V = interpolate(rec, t_sim - sc.time_offset)
    c, hip = centers(J, V)
    # hold the last seen center through frames with no valid body joint
    bad = np.isnan(c[:, 0])
    if bad.any():
        idx = np.where(~bad, np.arange(len(c)), 0)
        np.maximum.accumulate(idx, out=idx)
        c, hip = c[idx], hip[idx]
    return c, hip, rec


# ---- main loop

def simulate(sc: SimScenario, log=None) -> SimMetrics:
    """Run one trial. ``log`` (a list) receives event dicts if given."""
    pol = sc.policy
    n_checks = int(round(sc.trial_duration / DT_CHECK))
    hc, hip, _ = human_track(sc, n_checks)
    task = _Task(sc.arms, sc.fallback_speed)
    C = sc.handover_center
    memory = BehaviorMemory(pol.memory) if pol.kind == "dynamic_learned" else None
    vel = VelocityEstimator(pol.memory.ema_alpha, pol.memory.horizon)
    freeze_at = math.inf if sc.freeze_at is None else sc.freeze_at
    fallback = False
    clear_for = 0.0
    hits = triggers = 0
    fallback_checks = 0
    warmup = None
    prev = None
    completion = None
    for k in range(n_checks):
        t = k * DT_CHECK
        h = hc[k].tolist()
        hp = hip[k].tolist()
        tcps = [a.pos for a in task.arms]
        # collisions
        if any(point_cylinder_distance(p, hp, HUMAN_RADIUS, HUMAN_HEIGHT) - TCP_RADIUS < 0.0 for p in tcps):
            hits += 1
            if log is not None:
                log.append({"t": t, "event": "hit"})
        # velocity state
        raw_v = (0.0, 0.0) if prev is None else ((h[0] - prev[0]) / DT_CHECK, (h[1] - prev[1]) / DT_CHECK)
        vel.update(h, DT_CHECK)
        prev = h
        # behavior memory
        if memory is not None and t < freeze_at:
            tcp_d = min(point_cylinder_distance(p, hp, HUMAN_RADIUS, HUMAN_HEIGHT) - TCP_RADIUS for p in tcps)
            _, ep = update_behavior_memory(memory, h, C, tcp_d, t)
            if ep is not None and log is not None:
                log.append({"t": t, "event": "episode", "bin": ep[0], "intrusion": ep[1]})
            if warmup is None and memory.learned:
                warmup = t
        # trigger
        trig = _trigger(pol, h, tcps, C, raw_v, vel, memory)
        blocked = any(a.in_exchange() for a in task.arms)
        if fallback:
            clear_for = 0.0 if trig else clear_for + DT_CHECK
            if clear_for >= sc.resume_after - 1e-9:
                fallback = False
                task.resume()
                if log is not None:
                    log.append({"t": t, "event": "resume"})
        elif trig and not blocked:
            fallback = True
            clear_for = 0.0
            triggers += 1
            task.interrupt()
            if log is not None:
                log.append({"t": t, "event": "trigger"})
        # motion over the next interval
        if fallback:
            fallback_checks += 1
            for a in task.arms:
                _move_toward(a.pos, a.spec.fallback, sc.fallback_speed, DT_CHECK)
        else:
            before = task.delivered
            task.run(t, DT_CHECK)
            if task.delivered >= sc.n_items and before < sc.n_items:
                completion = task.deliver_times[sc.n_items - 1]
                break
    done = completion is not None
    if not done:
        completion = sc.trial_duration
    items = min(task.delivered, sc.n_items)
    return SimMetrics(
        policy=pol.label,
        avg_cycle_s=completion / max(items, 1),
        human_hits=hits,
        triggers=triggers,
        fallback_s=fallback_checks * DT_CHECK,
        items=items,
        completed=done,
        completion_s=completion,
        warmup_s=warmup,
        seed=sc.seed,
    )


def _trigger(pol: PolicyConfig, h, tcps, C, raw_v, vel: VelocityEstimator, memory) -> bool:
    kind = pol.kind
    if kind == "non_aware":
        return False
    if kind == "static":
        return static_trigger(h, tcps, pol.r, pol.H)
    dx, dy, _ = approach_direction(h, C)
    if memory is None or not memory.learned:
        v_app = -(raw_v[0] * dx + raw_v[1] * dy)
        return dynamic_region(h, C, v_app, pol.r_base, pol.k, pol.r_min, pol.r_max)[0]
    v_app = vel.effective((dx, dy))
    R = min(max(pol.r_base + pol.k * v_app, pol.r_min), pol.r_max)
    gain = modulated_radius(memory, bearing(h, C), R) / R
    return dynamic_region(h, C, v_app, pol.r_base, pol.k, pol.r_min, pol.r_max, gain)[0]


def memory_freeze_sweep(sc: SimScenario, fractions, seed: int | None = None):
    """One learned-policy trial per freeze point, as (fraction, hits, avg cycle)."""
    if sc.policy.kind != "dynamic_learned":
        raise ConfigError("memory_freeze_sweep needs a dynamic_learned policy")
    if seed is not None:
        sc = replace(sc, seed=seed)
    out = []
    for f in fractions:
        m = simulate(replace(sc, freeze_at=float(f) * sc.trial_duration))
        out.append((float(f), m.human_hits, m.avg_cycle_s))
    return out


def load_scenario(path) -> SimScenario:
    return SimScenario.from_dict(read_json(path))


def save_scenario(path, sc: SimScenario) -> None:
    write_json(path, sc.to_dict())


def write_metrics(path, metrics) -> None:
    write_csv(path, METRIC_COLUMNS, [m.row() for m in metrics])


def learning_scenario(seed: int = 0, policy: PolicyConfig | None = None) -> SimScenario:
    """Long session against a person who keeps dashing in from one bearing sector."""
    return SimScenario(policy=policy or PolicyConfig("dynamic_learned"), seed=seed, n_items=96,
                       human={"pattern": "adversarial", "duration": 1800.0})


def table_policies():
    return [
        PolicyConfig("non_aware"),
        PolicyConfig("static", r=0.5, H=2.0),
        PolicyConfig("static", r=2.0, H=2.0),
        PolicyConfig("dynamic"),
        PolicyConfig("dynamic_learned"),
    ]
