from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import RigidPose


@dataclass(frozen=True, eq=False)
class BoardModel:
    """Planar calibration target; corners live in the board's z = 0 plane."""

    id: int
    corner_points: np.ndarray

    def __post_init__(self):
        P = np.array(self.corner_points, dtype=float).reshape(-1, 3)
        if len(P) < 4:
            raise ValueError("a board needs at least 4 corners")
        if np.any(P[:, 2] != 0.0):
            raise ValueError("board corners must have z = 0")
        centered = P[:, :2] - P[:, :2].mean(axis=0)
        s = np.linalg.svd(centered, compute_uv=False)
        if s[1] <= 1e-9 * max(s[0], 1e-12):
            raise ValueError("board corners are collinear")
        P.flags.writeable = False
        object.__setattr__(self, "corner_points", P)

    @property
    def n_corners(self) -> int:
        return len(self.corner_points)


def charuco_board(board_id: int, inner_x: int = 5, inner_y: int = 7, square: float = 0.08) -> BoardModel:
    """Grid of inner chessboard corners, origin at the first corner."""
    xs, ys = np.meshgrid(np.arange(inner_x) * square, np.arange(inner_y) * square, indexing="xy")
    P = np.stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)], axis=1)
    return BoardModel(board_id, P)


@dataclass(frozen=True)
class CornerObservation:
    camera_id: int
    board_id: int
    corner_index: int
    pixel: tuple
    frame: int = 0


class ObservationSet:
    """Column-oriented store of corner observations."""

    def __init__(self, camera_ids, board_ids, corner_indices, pixels, frames=None):
        self.camera = np.asarray(camera_ids, dtype=int).reshape(-1)
        self.board = np.asarray(board_ids, dtype=int).reshape(-1)
        self.corner = np.asarray(corner_indices, dtype=int).reshape(-1)
        self.uv = np.asarray(pixels, dtype=float).reshape(-1, 2)
        self.frame = np.zeros(len(self.camera), dtype=int) if frames is None else np.asarray(frames, dtype=int)
        n = len(self.camera)
        if not (len(self.board) == len(self.corner) == len(self.uv) == len(self.frame) == n):
            raise ValueError("observation columns differ in length")

    @classmethod
    def from_list(cls, obs) -> ObservationSet:
        obs = list(obs)
        return cls(
            [o.camera_id for o in obs],
            [o.board_id for o in obs],
            [o.corner_index for o in obs],
            [o.pixel for o in obs] if obs else np.zeros((0, 2)),
            [o.frame for o in obs],
        )

    def to_list(self) -> list[CornerObservation]:
        return [
            CornerObservation(int(c), int(b), int(k), (float(u), float(v)), int(f))
            for c, b, k, (u, v), f in zip(self.camera, self.board, self.corner, self.uv, self.frame)
        ]

    def __len__(self):
        return len(self.camera)

    def subset(self, mask) -> ObservationSet:
        return ObservationSet(self.camera[mask], self.board[mask], self.corner[mask], self.uv[mask], self.frame[mask])

    def pairs(self):
        """Sorted unique (camera_id, board_id) pairs."""
        keys = sorted(set(zip(self.camera.tolist(), self.board.tolist())))
        return keys

    def select(self, camera_id, board_id) -> ObservationSet:
        return self.subset((self.camera == camera_id) & (self.board == board_id))


@dataclass(frozen=True, eq=False)
class PoseEdge:
    camera_id: int
    board_id: int
    cam_from_board: RigidPose
    residual: float


@dataclass
class PoseGraph:
    """Bipartite camera/board graph; edges only join a camera to a board."""

    camera_ids: list = field(default_factory=list)
    board_ids: list = field(default_factory=list)
    edges: list = field(default_factory=list)

    def add_edge(self, edge: PoseEdge):
        if edge.camera_id not in self.camera_ids:
            self.camera_ids.append(edge.camera_id)
        if edge.board_id not in self.board_ids:
            self.board_ids.append(edge.board_id)
        self.edges.append(edge)

    def degree(self, camera_id) -> int:
        return sum(1 for e in self.edges if e.camera_id == camera_id)


@dataclass(eq=False)
class CalibrationSolution:
    """World-to-camera poses and board-to-world poses (Board 0 = identity).

    ``intrinsics`` maps camera id to a CameraModel whose intrinsics apply; its
    stored extrinsic is ignored in favour of ``cameras``.
    """

    cameras: dict
    boards: dict
    intrinsics: dict = field(default_factory=dict)

    def camera_models(self) -> dict:
        return {cid: self.intrinsics[cid].with_pose(p) for cid, p in sorted(self.cameras.items())}


@dataclass(frozen=True, eq=False)
class HandEyeSolution:
    Z: RigidPose
    X: RigidPose
    residual_max: float
    residual_mean: float
    rot_residual_max: float
    trans_residual_max: float
