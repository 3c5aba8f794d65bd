"""Chaining per-pair PnP poses into one world frame anchored at Board 0."""

from __future__ import annotations

import heapq

from ..errors import Disconnected
from ..geometry import RigidPose, compose
from .types import CalibrationSolution, PoseGraph

CAM, BOARD = 0, 1


def root_camera(graph: PoseGraph) -> int:
    """Most-connected camera, ties to the lowest id."""
    if not graph.camera_ids:
        raise Disconnected([])
    return min(graph.camera_ids, key=lambda c: (-graph.degree(c), c))


def unify_pose_graph(graph: PoseGraph, world_board: int = 0) -> CalibrationSolution:
    """World-to-camera and board-to-world poses, Board ``world_board`` at identity.

    Paths come from Dijkstra over summed per-edge residuals starting at the root
    camera, so each node is reached along its minimum-cumulative-residual chain.
    """
    if world_board not in graph.board_ids:
        raise Disconnected([(BOARD, world_board)])
    adj: dict = {}
    for e in graph.edges:
        adj.setdefault((CAM, e.camera_id), []).append(((BOARD, e.board_id), e))
        adj.setdefault((BOARD, e.board_id), []).append(((CAM, e.camera_id), e))

    root = (CAM, root_camera(graph))
    # poses in the root-camera frame: cameras as root->cam, boards as board->root
    pose = {root: RigidPose.identity()}
    best = {root: (0.0, 0)}
    done = set()
    heap = [(0.0, 0, root)]
    while heap:
        cost, hops, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        for nbr, e in sorted(adj.get(node, []), key=lambda t: t[0]):
            if nbr in done:
                continue
            cand = (cost + e.residual, hops + 1)
            if nbr not in best or cand < best[nbr]:
                best[nbr] = cand
                if node[0] == CAM:
                    # board->root = (root->cam)^-1 * (board->cam)
                    pose[nbr] = compose(pose[node].inverse(), e.cam_from_board)
                else:
                    # root->cam = (board->cam) * (board->root)^-1
                    pose[nbr] = compose(e.cam_from_board, pose[node].inverse())
                heapq.heappush(heap, (cand[0], cand[1], nbr))

    all_nodes = {(CAM, c) for c in graph.camera_ids} | {(BOARD, b) for b in graph.board_ids}
    missing = all_nodes - done
    if missing:
        raise Disconnected(missing)

    root_from_world = pose[(BOARD, world_board)]  # board0->root == world->root
    world_from_root = root_from_world.inverse()
    cameras = {}
    boards = {}
    for (kind, nid), p in pose.items():
        if kind == CAM:
            cameras[nid] = compose(p, root_from_world)
        else:
            boards[nid] = compose(world_from_root, p)
    boards[world_board] = RigidPose.identity()
    return CalibrationSolution(cameras=cameras, boards=boards)
