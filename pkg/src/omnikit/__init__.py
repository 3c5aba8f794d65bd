"""Room-scale multi-camera calibration, tracking, coverage, safety and handover tools."""

__version__ = "0.1.0"
