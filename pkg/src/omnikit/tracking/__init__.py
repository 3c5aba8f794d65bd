from .aggregator import FrameAggregator, KeypointReport, promote_frame
from .one_euro import JointSmoother, OneEuroState, one_euro_step
from .tracker import (
    PersonTrack, ReIdCache, Tracker, associate_stage1, associate_stage2, predict_track, update_lifecycle,
)
from .triangulation import triangulate_dlt, triangulate_ransac

__all__ = [
    "FrameAggregator", "JointSmoother", "KeypointReport", "OneEuroState", "PersonTrack", "ReIdCache", "Tracker",
    "associate_stage1", "associate_stage2", "one_euro_step", "predict_track", "promote_frame",
    "triangulate_dlt", "triangulate_ransac", "update_lifecycle",
]
