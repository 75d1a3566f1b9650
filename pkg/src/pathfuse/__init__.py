"""pathfuse: single-shot demonstration + CAD path -> robot program.

A human demonstrates the tool motion once with a tracked handheld sensor;
the nominal geometry comes from CAD.  This package fuses the two (CAD
positions, demonstrated orientations and speeds), expresses the result in
robot-base coordinates, serializes it as a PathML XML document, checks it
against kinematic limits, and emits a neutral robot program.
"""

from .errors import (
    DegeneratePathError,
    FrameMismatchError,
    ParseError,
    PathfuseError,
    ResampleWarning,
    SchemaError,
    TimeParameterizationWarning,
    ValidationError,
)
from .geometry import (
    CalibrationSet,
    EulerZyx,
    Frame,
    Transform4,
    chain_to_robot,
    compose,
    euler_zyx_from_rot,
    invert,
    make_transform,
    robot_angles_fixed_xyz,
    rot_from_euler_zyx,
    rot_from_fixed_xyz,
    rotation_angle,
    wrap_angle,
)
from .demo import (
    PoseSample,
    PoseSeries,
    TrackerErrorModel,
    downsample,
    estimate_speed,
    filter_outliers,
    format_demo_csv,
    parse_demo,
    path_parameters,
    synth_demo,
)
from .cad import ArcParams, CadPath, arc_params, parse_cad, resample_cad
from .fusion import (
    FusedPath,
    FusedPoint,
    fuse,
    fused_path_from_json,
    fused_path_to_json,
    to_robot_frame,
)
from .pathml import (
    Layer,
    PathMLDocument,
    PathPoint,
    ProcessParameters,
    ProcessType,
    Track,
    Violation,
    build_document,
    expand_layers,
    parse_xml,
    validate_document,
    write_xml,
)
from .program import (
    DeviationReport,
    Dialect,
    LimitViolation,
    PathLimits,
    RobotProgram,
    SectionDeviation,
    ValidationReport,
    deviation_report,
    emit_program,
    validate_path,
)

__version__ = "0.1.0"

__all__ = [
    "ArcParams",
    "CadPath",
    "CalibrationSet",
    "DegeneratePathError",
    "DeviationReport",
    "Dialect",
    "EulerZyx",
    "Frame",
    "FrameMismatchError",
    "FusedPath",
    "FusedPoint",
    "Layer",
    "LimitViolation",
    "ParseError",
    "PathLimits",
    "PathMLDocument",
    "PathPoint",
    "PathfuseError",
    "PoseSample",
    "PoseSeries",
    "ProcessParameters",
    "ProcessType",
    "ResampleWarning",
    "RobotProgram",
    "SchemaError",
    "SectionDeviation",
    "TimeParameterizationWarning",
    "Track",
    "TrackerErrorModel",
    "Transform4",
    "ValidationError",
    "ValidationReport",
    "Violation",
    "arc_params",
    "build_document",
    "chain_to_robot",
    "compose",
    "deviation_report",
    "downsample",
    "emit_program",
    "estimate_speed",
    "euler_zyx_from_rot",
    "expand_layers",
    "filter_outliers",
    "format_demo_csv",
    "fuse",
    "fused_path_from_json",
    "fused_path_to_json",
    "invert",
    "make_transform",
    "parse_cad",
    "parse_demo",
    "parse_xml",
    "path_parameters",
    "resample_cad",
    "robot_angles_fixed_xyz",
    "rot_from_euler_zyx",
    "rot_from_fixed_xyz",
    "rotation_angle",
    "synth_demo",
    "to_robot_frame",
    "validate_document",
    "validate_path",
    "wrap_angle",
    "write_xml",
]
