"""Analytic derivatives of the full camera projection."""

from __future__ import annotations

import numpy as np

from ..geometry import CameraModel, RigidPose, exp_so3


def project_with_jacobians(fx, fy, cx, cy, dist, pc, want_intrinsics=False):
    """Pixels for camera-frame points ``pc`` (N, 3) plus d(uv)/d(pc) (N, 2, 3).

    With ``want_intrinsics`` also returns d(uv)/d(fx, fy, cx, cy, k1, k2, p1, p2, k3) (N, 2, 9).
    """
    k1, k2, p1, p2, k3 = dist
    X, Y, Z = pc[:, 0], pc[:, 1], pc[:, 2]
    iz = 1.0 / Z
    x, y = X * iz, Y * iz
    r2 = x * x + y * y
    rad = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    drad = k1 + r2 * (2.0 * k2 + 3.0 * k3 * r2)
    xd = x * rad + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * rad + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    uv = np.stack([fx * xd + cx, fy * yd + cy], axis=1)

    dxd_dx = rad + 2.0 * x * x * drad + 2.0 * p1 * y + 6.0 * p2 * x
    dxd_dy = 2.0 * x * y * drad + 2.0 * p1 * x + 2.0 * p2 * y
    dyd_dx = dxd_dy
    dyd_dy = rad + 2.0 * y * y * drad + 6.0 * p1 * y + 2.0 * p2 * x

    # d(x, y)/d(X, Y, Z)
    n = len(pc)
    dn = np.zeros((n, 2, 3))
    dn[:, 0, 0] = iz
    dn[:, 0, 2] = -x * iz
    dn[:, 1, 1] = iz
    dn[:, 1, 2] = -y * iz
    D = np.empty((n, 2, 2))
    D[:, 0, 0] = fx * dxd_dx
    D[:, 0, 1] = fx * dxd_dy
    D[:, 1, 0] = fy * dyd_dx
    D[:, 1, 1] = fy * dyd_dy
    J = np.einsum("nij,njk->nik", D, dn)
    if not want_intrinsics:
        return uv, J
    Ji = np.zeros((n, 2, 9))
    Ji[:, 0, 0] = xd
    Ji[:, 1, 1] = yd
    Ji[:, 0, 2] = 1.0
    Ji[:, 1, 3] = 1.0
    Ji[:, 0, 4] = fx * x * r2
    Ji[:, 1, 4] = fy * y * r2
    Ji[:, 0, 5] = fx * x * r2 * r2
    Ji[:, 1, 5] = fy * y * r2 * r2
    Ji[:, 0, 6] = fx * 2.0 * x * y
    Ji[:, 1, 6] = fy * (r2 + 2.0 * y * y)
    Ji[:, 0, 7] = fx * (r2 + 2.0 * x * x)
    Ji[:, 1, 7] = fy * 2.0 * x * y
    Ji[:, 0, 8] = fx * x * r2**3
    Ji[:, 1, 8] = fy * y * r2**3
    return uv, J, Ji


def left_perturbation_jacobian(pc):
    """d(pc)/d(rho, phi) for the update T <- (exp(phi), rho) * T, shape (N, 3, 6)."""
    n = len(pc)
    J = np.zeros((n, 3, 6))
    J[:, 0, 0] = J[:, 1, 1] = J[:, 2, 2] = 1.0
    # -[pc]x
    J[:, 0, 4] = pc[:, 2]
    J[:, 0, 5] = -pc[:, 1]
    J[:, 1, 3] = -pc[:, 2]
    J[:, 1, 5] = pc[:, 0]
    J[:, 2, 3] = pc[:, 1]
    J[:, 2, 4] = -pc[:, 0]
    return J


def perturb_left(pose: RigidPose, delta) -> RigidPose:
    """Apply a 6-vector (rho, phi) as (exp(phi), rho) * pose."""
    Rd = exp_so3(delta[3:6])
    return RigidPose(Rd @ pose.rotation, Rd @ pose.translation + delta[:3])


def reprojection_residuals(cam: CameraModel, cam_from_obj: RigidPose, points, uv):
    pc = cam_from_obj.apply(points)
    pred, _ = project_with_jacobians(cam.fx, cam.fy, cam.cx, cam.cy, cam.dist, pc)
    return pred - uv
