"""The 65-joint whole-body layout (COCO-WholeBody without the 68 face points)."""

from __future__ import annotations

import numpy as np

N_JOINTS = 65
# position in our 65-joint array -> index in the 133-point COCO-WholeBody layout
WHOLEBODY_INDEX = tuple(range(0, 23)) + tuple(range(91, 133))
BODY = tuple(range(0, 23))          # body + feet
LEFT_HAND = tuple(range(23, 44))
RIGHT_HAND = tuple(range(44, 65))

NOSE = 0
L_SHOULDER, R_SHOULDER = 5, 6
L_HIP, R_HIP = 11, 12
TORSO = (L_SHOULDER, R_SHOULDER, L_HIP, R_HIP)
HIPS = (L_HIP, R_HIP)


def from_wholebody(arr133):
    """Drop the face block from a (133, ...) array."""
    return np.asarray(arr133)[list(WHOLEBODY_INDEX)]


def hip_midpoint(joints, valid=None):
    j = np.asarray(joints, dtype=float)
    if valid is not None and not (valid[L_HIP] and valid[R_HIP]):
        return None
    return 0.5 * (j[L_HIP] + j[R_HIP])


def torso_centroid(joints, valid=None):
    j = np.asarray(joints, dtype=float)
    idx = [k for k in TORSO if valid is None or valid[k]]
    if not idx:
        return None
    return j[idx].mean(axis=0)
