"""Synthetic calibration room: camera ring, floor and wall boards, projected corners."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import CameraModel, RigidPose, compose, exp_so3, frustum_mask, look_at, project_points
from ..seeding import stream
from .pnp import normal_faces_camera
from .types import ObservationSet, charuco_board

ROOM_X, ROOM_Y = 5.5, 4.2  # 23.1 m^2
RING_HEIGHTS = (2.4, 1.4)
D_MIN, D_MAX = 0.3, 8.0


@dataclass(eq=False)
class CalibScene:
    cameras: list          # ground-truth CameraModel, id order
    boards: dict           # id -> BoardModel
    board_poses: dict      # id -> board-to-world RigidPose (Board 0 = identity)
    observations: ObservationSet

    def intrinsics(self) -> dict:
        """Cameras with their true intrinsics and an identity extrinsic."""
        return {c.id: c.with_pose(RigidPose.identity()) for c in self.cameras}


def _wall_pose(wall: int, u: float, h: float) -> RigidPose:
    # board +z points into the room, board +y points down the wall
    hx, hy = ROOM_X / 2, ROOM_Y / 2
    inward = [np.array([-1.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0, -1.0, 0]), np.array([0, 1.0, 0])][wall]
    origin = [np.array([hx, u, h]), np.array([-hx, u, h]), np.array([u, hy, h]), np.array([u, -hy, h])][wall]
    y = np.array([0.0, 0.0, -1.0])
    x = np.cross(y, inward)
    return RigidPose(np.stack([x, y, inward], axis=1), origin)


def _board_poses(rng, n_boards: int) -> dict:
    poses = {0: RigidPose.identity()}
    floor_slots = [(-1.6, -1.2), (1.2, 0.9), (-1.5, 1.0), (1.2, -1.4), (0.2, 1.3), (0.3, -1.6)]
    k_floor = k_wall = 0
    for b in range(1, n_boards):
        jitter = rng.uniform(-0.15, 0.15, 2)
        if b % 2 == 1 and k_floor < len(floor_slots):
            x, y = np.array(floor_slots[k_floor]) + jitter
            k_floor += 1
            poses[b] = RigidPose(exp_so3([0.0, 0.0, rng.uniform(-np.pi, np.pi)]), np.array([x, y, 0.0]))
        else:
            wall = k_wall % 4
            half = (ROOM_Y if wall < 2 else ROOM_X) / 2 - 0.6
            u = rng.uniform(-half, half - 0.4)
            poses[b] = _wall_pose(wall, u, 1.1 + 0.5 * (k_wall // 4 % 2) + jitter[1])
            k_wall += 1
    return poses


def _cameras(rng, n_cameras: int) -> list:
    cams = []
    a, b = ROOM_X / 2 - 0.25, ROOM_Y / 2 - 0.25
    for i in range(n_cameras):
        phi = 2 * np.pi * i / n_cameras + rng.uniform(-0.05, 0.05)
        eye = np.array([a * np.cos(phi), b * np.sin(phi), RING_HEIGHTS[i % 2] + rng.uniform(-0.05, 0.05)])
        target = np.array([0.0, 0.0, 0.6]) + rng.uniform(-0.4, 0.4, 3) * np.array([1, 1, 0.5])
        fx = rng.uniform(880.0, 920.0)
        dist = (rng.uniform(-0.06, -0.02), rng.uniform(0.0, 0.02), rng.uniform(-5e-4, 5e-4), rng.uniform(-5e-4, 5e-4), 0.0)
        cams.append(
            CameraModel.from_extrinsic(
                look_at(eye, target),
                fx=fx, fy=fx * rng.uniform(0.995, 1.005), cx=1024.0 + rng.uniform(-8, 8), cy=768.0 + rng.uniform(-8, 8),
                dist=dist, id=i,
            )
        )
    return cams


def _observe(cams, boards, poses) -> ObservationSet:
    cols = {"c": [], "b": [], "k": [], "uv": []}
    for cam in cams:
        for bid in sorted(boards):
            T = poses[bid]
            if not normal_faces_camera(compose(cam.pose, T)):
                continue
            Xw = T.apply(boards[bid].corner_points)
            if not frustum_mask(cam, Xw, D_MIN, D_MAX).all():
                continue
            uv, _ = project_points(cam, Xw)
            n = len(uv)
            cols["c"].append(np.full(n, cam.id))
            cols["b"].append(np.full(n, bid))
            cols["k"].append(np.arange(n))
            cols["uv"].append(uv)
    uv = np.concatenate(cols["uv"]) if cols["uv"] else np.zeros((0, 2))
    cat = lambda key: np.concatenate(cols[key]) if cols[key] else np.zeros(0, int)
    return ObservationSet(cat("c"), cat("b"), cat("k"), uv)


def is_connected(obs: ObservationSet, n_cameras: int, n_boards: int) -> bool:
    parent = list(range(n_cameras + n_boards))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for c, b in obs.pairs():
        parent[find(c)] = find(n_cameras + b)
    return len({find(i) for i in range(n_cameras + n_boards)}) == 1


def generate_calib_scene(seed: int = 0, n_cameras: int = 8, n_boards: int = 4, noise_px: float = 0.0,
                         max_attempts: int = 50) -> CalibScene:
    """Deterministic rig whose camera-board graph is connected.

    A camera observes a board only when all of its corners are inside the
    frustum and the board faces the camera. Layouts that leave the graph
    disconnected are redrawn from the same stream.
    """
    if n_cameras < 2 or n_boards < 1:
        raise ValueError("need >= 2 cameras and >= 1 board")
    rng = stream(seed, "calib-scene")
    noise = stream(seed, "calib-noise")
    boards = {b: charuco_board(b) for b in range(n_boards)}
    for _ in range(max_attempts):
        cams = _cameras(rng, n_cameras)
        poses = _board_poses(rng, n_boards)
        obs = _observe(cams, boards, poses)
        if is_connected(obs, n_cameras, n_boards):
            break
    else:
        raise RuntimeError("could not draw a connected calibration layout")
    if noise_px > 0:
        obs = ObservationSet(obs.camera, obs.board, obs.corner, obs.uv + noise.normal(0.0, noise_px, obs.uv.shape))
    return CalibScene(cams, boards, poses, obs)
