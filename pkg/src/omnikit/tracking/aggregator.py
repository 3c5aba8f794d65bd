"""Collecting per-camera keypoint reports into frames ready for fusion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .skeleton import N_JOINTS

WINDOW_FRAMES = 60
MIN_CAMERAS = 4


def required_cameras(n_active: int) -> int:
    # ceil(0.6 n) in integer arithmetic
    return max(MIN_CAMERAS, -(-3 * n_active // 5))


def promote_frame(active_cameras, reports_in_window: dict, frame: int) -> bool:
    """True when enough active cameras reported ``frame``."""
    if not active_cameras:
        raise ValueError("active camera set is empty")
    got = set(reports_in_window.get(frame, ())) & set(active_cameras)
    return len(got) >= required_cameras(len(set(active_cameras)))


@dataclass
class Detection:
    """One person seen by one camera. ``uv`` is in undistorted pixels once ingested."""

    uv: np.ndarray          # (65, 2)
    score: np.ndarray       # (65,) sqrt(s_x * s_y)
    bbox: tuple = (0.0, 0.0, 0.0, 0.0)


@dataclass
class KeypointReport:
    camera_id: int
    frame: int
    persons: list = field(default_factory=list)   # list[Detection]

    @classmethod
    def from_record(cls, rec: dict) -> KeypointReport:
        persons = []
        for p in rec.get("persons", []):
            kp = np.asarray(p["keypoints"], dtype=float).reshape(N_JOINTS, 4)
            if np.any(kp[:, 2:] < 0):
                raise ValueError("keypoint scores must be >= 0")
            persons.append(Detection(kp[:, :2].copy(), np.sqrt(kp[:, 2] * kp[:, 3]), tuple(p.get("bbox", (0, 0, 0, 0)))))
        return cls(int(rec["camera_id"]), int(rec["frame"]), persons)


class FrameAggregator:
    """Buffers reports; a frame is finalized once the stream is ``window`` frames past it.

    Finalized frames that meet the camera quota are emitted in order; the rest
    are dropped and counted.
    """

    def __init__(self, active_cameras, window: int = WINDOW_FRAMES):
        self.active = set(active_cameras)
        self.window = window
        self.buffer: dict = {}
        self.latest = None
        self.dropped = 0
        self._last_frame_by_cam: dict = {}

    def add(self, report: KeypointReport) -> list:
        prev = self._last_frame_by_cam.get(report.camera_id)
        if prev is not None and report.frame < prev:
            raise ValueError(f"camera {report.camera_id}: frame index went backwards")
        self._last_frame_by_cam[report.camera_id] = report.frame
        self.buffer.setdefault(report.frame, {})[report.camera_id] = report
        self.latest = report.frame if self.latest is None else max(self.latest, report.frame)
        return self._drain(self.latest - self.window)

    def flush(self) -> list:
        return self._drain(None)

    def _drain(self, upto) -> list:
        out = []
        for f in sorted(self.buffer):
            if upto is not None and f > upto:
                break
            reports = self.buffer.pop(f)
            if promote_frame(self.active, {f: reports.keys()}, f):
                out.append((f, reports))
            else:
                self.dropped += 1
        return out
