"""Replay a report stream through aggregation and tracking."""

from __future__ import annotations

from .aggregator import FrameAggregator, KeypointReport
from .tracker import Tracker


def run_tracking(records, cameras, seed: int = 0, fps: float = 30.0):
    """Returns (per-track output records, number of dropped frames)."""
    agg = FrameAggregator({c.id for c in cameras})
    tracker = Tracker(cameras, seed=seed, fps=fps)
    out = []
    for rec in records:
        for frame, reports in agg.add(KeypointReport.from_record(rec)):
            out.extend(tracker.step(frame, reports))
    for frame, reports in agg.flush():
        out.extend(tracker.step(frame, reports))
    return out, agg.dropped


def output_record(rec: dict, smoothed: bool = True) -> dict:
    J = rec["smoothed"] if smoothed else rec["raw"]
    return {
        "frame": rec["frame"],
        "track_id": rec["track_id"],
        "joints": [[float(v) for v in j] if ok else None for j, ok in zip(J, rec["valid"])],
    }
