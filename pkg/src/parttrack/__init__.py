"""Multi-target part tracking with a joint 0-1 assignment/association program."""

from .core import (
    Detection,
    MotionModel,
    PartType,
    TargetState,
    TrackerConfig,
    VariableLayout,
    layout,
)
from .ilp import AssignmentProblem, Solution, branch_and_bound, build_problem, check_feasible, exhaustive_oracle
from .metrics import GroundTruthTrack, MetricsReport, evaluate
from .tracker import FrameResult, PartTracker, Track, init_tracks, run

__all__ = [
    "AssignmentProblem",
    "Detection",
    "FrameResult",
    "GroundTruthTrack",
    "MetricsReport",
    "MotionModel",
    "PartTracker",
    "PartType",
    "Solution",
    "TargetState",
    "Track",
    "TrackerConfig",
    "VariableLayout",
    "branch_and_bound",
    "build_problem",
    "check_feasible",
    "evaluate",
    "exhaustive_oracle",
    "init_tracks",
    "layout",
    "run",
]

__version__ = "0.1.0"
