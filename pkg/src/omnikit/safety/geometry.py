"""Collision primitives: TCP sphere against a vertical human cylinder."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NoValidJoints
from ..tracking.skeleton import HIPS

BODY_JOINTS = 23
TCP_RADIUS = 0.08
HUMAN_RADIUS = 0.3
HUMAN_HEIGHT = 1.8


@dataclass(frozen=True)
class HumanCylinder:
    center: tuple            # hip, meters; the cylinder spans center.z +- height/2
    radius: float = HUMAN_RADIUS
    height: float = HUMAN_HEIGHT


@dataclass(frozen=True)
class TcpSphere:
    center: tuple
    radius: float = TCP_RADIUS

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")


def human_center(joints, valid=None) -> np.ndarray:
    """Mean of the valid body joints (indices 0..22)."""
    J = np.asarray(joints, dtype=float)[:BODY_JOINTS]
    m = np.ones(BODY_JOINTS, bool) if valid is None else np.asarray(valid, bool)[:BODY_JOINTS]
    if not m.any():
        raise NoValidJoints("no valid body joint in frame")
    return J[m].mean(axis=0)


def hip_center(joints, valid=None):
    J = np.asarray(joints, dtype=float)
    if valid is not None and not all(valid[k] for k in HIPS):
        return None
    return 0.5 * (J[HIPS[0]] + J[HIPS[1]])


def _clearances(p, c, radius, height):
    dx, dy = p[0] - c[0], p[1] - c[1]
    rho = math.hypot(dx, dy)
    return dx, dy, rho, rho - radius, abs(p[2] - c[2]) - 0.5 * height


def sphere_cylinder_distance(sphere: TcpSphere, human: HumanCylinder) -> float:
    """Signed distance; negative means the sphere penetrates the cylinder."""
    return point_cylinder_distance(sphere.center, human.center, human.radius, human.height) - sphere.radius


def point_cylinder_distance(p, c, radius: float = HUMAN_RADIUS, height: float = HUMAN_HEIGHT) -> float:
    _, _, _, radial, axial = _clearances(p, c, radius, height)
    if radial > 0.0 and axial > 0.0:
        return math.hypot(radial, axial)
    return max(radial, axial)


def cylinder_normal(p, c, radius: float = HUMAN_RADIUS, height: float = HUMAN_HEIGHT) -> np.ndarray:
    """Unit gradient of the point-cylinder distance, pointing away from the human."""
    dx, dy, rho, radial, axial = _clearances(p, c, radius, height)
    sz = 1.0 if p[2] >= c[2] else -1.0
    if rho > 1e-12:
        ux, uy = dx / rho, dy / rho
    else:
        ux, uy = 1.0, 0.0
    if radial > 0.0 and axial > 0.0:
        n = np.array([ux * radial, uy * radial, sz * axial])
        return n / np.linalg.norm(n)
    if radial >= axial:
        return np.array([ux, uy, 0.0])
    return np.array([0.0, 0.0, sz])
