"""End-to-end extrinsic calibration and the observations file format."""

from __future__ import annotations

import numpy as np

from ..errors import Degenerate, NoSolution, SchemaError
from ..fileio import camera_from_dict, camera_to_dict, read_json, to_jsonable
from ..geometry import RigidPose
from .bundle import bundle_adjust, observation_residuals, reprojection_stats
from .pnp import mean_reprojection, solve_pnp
from .posegraph import unify_pose_graph
from .types import BoardModel, ObservationSet, PoseEdge, PoseGraph

PIPELINE_MODES = ("extrinsics_only", "full", "full_with_intrinsics")


def build_pose_graph(obs: ObservationSet, boards: dict, intrinsics: dict) -> PoseGraph:
    """One PnP edge per observed (camera, board) pair; frames are merged (boards are static)."""
    graph = PoseGraph()
    for cid, bid in obs.pairs():
        sel = obs.select(cid, bid)
        cam = intrinsics[cid]
        P = boards[bid].corner_points[sel.corner]
        try:
            T = solve_pnp(boards[bid], sel.corner, sel.uv, cam)
        except (Degenerate, NoSolution):
            continue
        graph.add_edge(PoseEdge(cid, bid, T, mean_reprojection(cam, T, P, sel.uv)))
    return graph


def calibrate(obs: ObservationSet, boards: dict, intrinsics: dict, mode: str = "full", world_board: int = 0):
    """PnP -> pose graph -> bundle adjustment.

    ``extrinsics_only`` stops after the first pass; ``full`` adds the joint pass;
    ``full_with_intrinsics`` also frees the intrinsics in a final pass.
    Returns (solution, stats).
    """
    if mode not in PIPELINE_MODES:
        raise ValueError(f"mode must be one of {PIPELINE_MODES}")
    graph = build_pose_graph(obs, boards, intrinsics)
    sol = unify_pose_graph(graph, world_board)
    sol.intrinsics = {c: intrinsics[c] for c in sol.cameras}
    sol = bundle_adjust(obs, boards, sol, "extrinsics_only", world_board).solution
    if mode != "extrinsics_only":
        sol = bundle_adjust(obs, boards, sol, "full", world_board).solution
    if mode == "full_with_intrinsics":
        sol = bundle_adjust(obs, boards, sol, "full_with_intrinsics", world_board).solution
    keep = np.isin(obs.camera, list(sol.cameras)) & np.isin(obs.board, list(sol.boards))
    stats = reprojection_stats(observation_residuals(sol, obs.subset(keep), boards))
    return sol, stats


# ------------------------------------------------------------ observations file


def observations_to_dict(obs: ObservationSet, boards: dict, intrinsics: dict) -> dict:
    frames = []
    keys = sorted(set(zip(obs.frame.tolist(), obs.camera.tolist(), obs.board.tolist())))
    for f, c, b in keys:
        m = (obs.frame == f) & (obs.camera == c) & (obs.board == b)
        corners = [[int(k), float(u), float(v)] for k, (u, v) in zip(obs.corner[m], obs.uv[m])]
        frames.append({"frame": f, "camera_id": c, "board_id": b, "corners": corners})
    return {
        "boards": [{"id": b, "corners": boards[b].corner_points.tolist()} for b in sorted(boards)],
        "cameras": [camera_to_dict(intrinsics[c]) for c in sorted(intrinsics)],
        "frames": frames,
    }


def observations_from_dict(d: dict):
    """(ObservationSet, boards, intrinsics) from the observations file schema."""
    try:
        boards = {int(b["id"]): BoardModel(int(b["id"]), np.array(b["corners"], dtype=float)) for b in d["boards"]}
        intrinsics = {}
        for c in d["cameras"]:
            c = dict(c)
            c.setdefault("T_world_cam", RigidPose.identity().matrix().reshape(-1).tolist())
            cam = camera_from_dict(c)
            intrinsics[cam.id] = cam
        cams, brds, ks, uvs, frs = [], [], [], [], []
        for fr in d["frames"]:
            cid, bid = int(fr["camera_id"]), int(fr["board_id"])
            if cid not in intrinsics or bid not in boards:
                raise SchemaError(f"frame references unknown camera {cid} or board {bid}")
            for k, u, v in fr["corners"]:
                if not 0 <= int(k) < boards[bid].n_corners:
                    raise SchemaError(f"corner index {k} out of range for board {bid}")
                cams.append(cid)
                brds.append(bid)
                ks.append(int(k))
                uvs.append((float(u), float(v)))
                frs.append(int(fr.get("frame", 0)))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"malformed observations file: {e!r}") from e
    obs = ObservationSet(cams, brds, ks, uvs if uvs else np.zeros((0, 2)), frs)
    return obs, boards, intrinsics


def load_observations(path):
    return observations_from_dict(read_json(path))


def truth_to_dict(scene) -> dict:
    return to_jsonable({
        "cameras": [camera_to_dict(c) for c in scene.cameras],
        "boards": {str(b): p.matrix().reshape(-1).tolist() for b, p in sorted(scene.board_poses.items())},
    })
