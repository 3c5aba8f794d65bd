from .kinematics import (
    BUILTIN_CHAINS, KinematicChain, ik_solve, limit_margin, manipulability, planar_two_link, seven_axis_arm,
)
from .planner import (
    HandoverCandidate, HandoverConfig, Weights, plan_handover, prehandover, receiver_pose,
    sample_candidate_positions, score_candidate, tcp_score,
)
