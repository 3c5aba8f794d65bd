from .cbf import CbfScenario, qp_cbf_step, simulate_cbf
from .geometry import (
    HumanCylinder, TcpSphere, cylinder_normal, hip_center, human_center, point_cylinder_distance,
    sphere_cylinder_distance,
)
from .policy import (
    BehaviorMemory, MemoryConfig, PolicyConfig, VelocityEstimator, bearing, bearing_bin, dynamic_region,
    effective_velocity, modulated_radius, static_trigger, update_behavior_memory,
)
from .recording import SkeletonRecording, generate_human, interpolate, load_recording, save_recording
from .sim import (
    METRIC_COLUMNS, SimMetrics, SimScenario, learning_scenario, load_scenario, memory_freeze_sweep, save_scenario,
    simulate, table_policies, write_metrics,
)
