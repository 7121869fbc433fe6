"""Indoor signal surveying from pedestrian dead reckoning.

A two-pass particle filter turns a noisy step log into a
floorplan-consistent walk, magnetic loop closures tie revisits
together, and Gaussian-process signal maps are fitted along the
recovered trajectory.
"""

from .filtering import (
    ConstraintSet,
    FilterLostError,
    FilterResult,
    KldConfig,
    kld_required_particles,
    kld_resample,
    pf1_kld_config,
    pf2_kld_config,
    propagate,
    prune_smooth,
    run_filter,
    seed_particles,
)
from .geometry import (
    Floorplan,
    FloorplanError,
    Pose2D,
    Room,
    containing_room,
    load_floorplan,
    parse_floorplan,
    segment_crosses_wall,
    wrap_angle,
)
from .loopclosure import (
    LoopClosureResult,
    MspParams,
    SegmentPair,
    StepLoopClosure,
    ValidationParams,
    detect_loop_closures,
    find_msps,
    obe_dtw,
    split_warping_path,
    thin_to_steps,
    validate_closure,
)
from .pipeline import (
    PipelineConfig,
    SurveyPoint,
    SurveyResult,
    build_signal_maps,
    build_survey_points,
    evaluate_trajectory,
    run_survey,
)
from .sensors import (
    MagSample,
    PdrTrajectory,
    StepEvent,
    StepNoiseModel,
    SurveyLog,
    WifiObservation,
    dead_reckon,
    load_survey_log,
    parse_survey_log,
    step_epoch_times,
)
from .signalmap import (
    GpParams,
    SignalMap,
    bucket_fractions,
    compare_maps,
    error_cdf,
    fit_signal_map,
    gp_predict,
    interval_overlap,
    position_one_shot,
)
from .simulate import (
    AccessPoint,
    MagFieldModel,
    Scenario,
    WalkScript,
    corrupt_steps,
    generate_walk,
    office_floorplan,
    simulate_scenario,
)
from .straightline import StraightLineParams, detect_straight_steps

__version__ = "0.1.0"

__all__ = [
    "AccessPoint",
    "ConstraintSet",
    "FilterLostError",
    "FilterResult",
    "Floorplan",
    "FloorplanError",
    "GpParams",
    "KldConfig",
    "LoopClosureResult",
    "MagFieldModel",
    "MagSample",
    "MspParams",
    "PdrTrajectory",
    "PipelineConfig",
    "Pose2D",
    "Room",
    "Scenario",
    "SegmentPair",
    "SignalMap",
    "StepEvent",
    "StepLoopClosure",
    "StepNoiseModel",
    "StraightLineParams",
    "SurveyLog",
    "SurveyPoint",
    "SurveyResult",
    "ValidationParams",
    "WalkScript",
    "WifiObservation",
    "bucket_fractions",
    "build_signal_maps",
    "build_survey_points",
    "compare_maps",
    "containing_room",
    "corrupt_steps",
    "dead_reckon",
    "detect_loop_closures",
    "detect_straight_steps",
    "error_cdf",
    "evaluate_trajectory",
    "find_msps",
    "fit_signal_map",
    "generate_walk",
    "gp_predict",
    "interval_overlap",
    "kld_required_particles",
    "kld_resample",
    "load_floorplan",
    "load_survey_log",
    "obe_dtw",
    "office_floorplan",
    "parse_floorplan",
    "parse_survey_log",
    "pf1_kld_config",
    "pf2_kld_config",
    "position_one_shot",
    "propagate",
    "prune_smooth",
    "run_filter",
    "run_survey",
    "seed_particles",
    "segment_crosses_wall",
    "simulate_scenario",
    "split_warping_path",
    "step_epoch_times",
    "thin_to_steps",
    "validate_closure",
    "wrap_angle",
]
