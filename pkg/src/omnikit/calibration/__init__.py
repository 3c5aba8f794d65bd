from .bundle import bundle_adjust, observation_residuals, reprojection_stats
from .handeye import localize_anchor, sample_handeye_configs, solve_hand_eye
from .multiview import refine_board_pose_multiview
from .pipeline import calibrate
from .pnp import solve_pnp
from .posegraph import unify_pose_graph
from .synthetic import generate_calib_scene
from .types import BoardModel, CalibrationSolution, CornerObservation, HandEyeSolution, ObservationSet, PoseEdge, PoseGraph

__all__ = [
    "BoardModel", "CalibrationSolution", "CornerObservation", "HandEyeSolution", "ObservationSet", "PoseEdge",
    "PoseGraph", "bundle_adjust", "calibrate", "generate_calib_scene", "localize_anchor",
    "observation_residuals", "refine_board_pose_multiview", "reprojection_stats", "sample_handeye_configs",
    "solve_hand_eye", "solve_pnp", "unify_pose_graph",
]
