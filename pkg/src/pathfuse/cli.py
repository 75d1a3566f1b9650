"""Command-line interface.

Subcommands cover the full pipeline: synthesize a demonstration, fuse it with
a CAD path, wrap the result as a PathML document, validate/expand/emit that
document, and compare an executed path against the nominal one.

Exit codes: 0 success, 1 a validation/report judged the data bad, 2 unusable
input or usage errors.  Outputs are deterministic; diagnostics go to stderr,
data to ``-o`` files or stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .cad import parse_cad, resample_cad
from .demo import (
    TrackerErrorModel,
    downsample,
    filter_outliers,
    format_demo_csv,
    parse_demo,
    synth_demo,
)
from .errors import PathfuseError
from .fusion import fuse, fused_path_from_json, fused_path_to_json, to_robot_frame
from .geometry import CalibrationSet, Frame, Transform4, rot_from_fixed_xyz
from .pathml import (
    ProcessParameters,
    build_document,
    expand_layers,
    parse_xml,
    validate_document,
    write_xml,
)
from .program import PathLimits, deviation_report, emit_program, validate_path

CONFIG_ENV = "PATHFUSE_CONFIG"


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for the fuse/emit/report pipeline, loadable from JSON.

    ``downsample_target`` of None picks max(100, 2 * cad waypoint count),
    clamped to the demonstration length.  ``resample_spacing_mm`` of None
    skips CAD resampling.
    """

    filter_window: int = 11
    filter_k: float = 3.0
    downsample_target: int | None = None
    resample_spacing_mm: float | None = None
    limits: PathLimits = field(default_factory=PathLimits)
    tolerance_mm: float = 4.0
    process: ProcessParameters | None = None


def _require_keys(obj: dict, allowed: Sequence[str], where: str) -> None:
    for k in obj:
        if k not in allowed:
            raise ValueError(f"unknown {where} key {k!r} (known: {', '.join(allowed)})")


def load_config(data: bytes | str) -> PipelineConfig:
    """Parse pipeline configuration JSON."""
    obj = json.loads(data)
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    _require_keys(
        obj,
        ("filter", "downsample_target", "resample_spacing_mm", "limits", "tolerance_mm", "process"),
        "config",
    )
    kwargs = {}
    if "filter" in obj:
        f = obj["filter"]
        if not isinstance(f, dict):
            raise ValueError("config 'filter' must be an object")
        _require_keys(f, ("window", "k"), "config filter")
        if "window" in f:
            kwargs["filter_window"] = int(f["window"])
        if "k" in f:
            kwargs["filter_k"] = float(f["k"])
    if obj.get("downsample_target") is not None:
        kwargs["downsample_target"] = int(obj["downsample_target"])
    if obj.get("resample_spacing_mm") is not None:
        kwargs["resample_spacing_mm"] = float(obj["resample_spacing_mm"])
    if "limits" in obj:
        lim = obj["limits"]
        if not isinstance(lim, dict):
            raise ValueError("config 'limits' must be an object")
        _require_keys(
            lim,
            ("max_step_mm", "max_speed_mm_s", "workspace_center", "workspace_radius_mm", "max_orient_step_deg"),
            "config limits",
        )
        kwargs["limits"] = PathLimits(**lim)
    if "tolerance_mm" in obj:
        kwargs["tolerance_mm"] = float(obj["tolerance_mm"])
    if "process" in obj:
        p = obj["process"]
        if not isinstance(p, dict):
            raise ValueError("config 'process' must be an object")
        _require_keys(
            p,
            ("process_type", "glue_flow_rate", "wire_feed_rate", "layer_height", "extra"),
            "config process",
        )
        if "process_type" not in p:
            raise ValueError("config process requires 'process_type'")
        kwargs["process"] = ProcessParameters(
            process_type=p["process_type"],
            glue_flow_rate=p.get("glue_flow_rate"),
            wire_feed_rate=p.get("wire_feed_rate"),
            layer_height=p.get("layer_height"),
            extra=p.get("extra", ()),
        )
    return PipelineConfig(**kwargs)


def load_calibration(data: bytes | str) -> CalibrationSet:
    """Parse calibration JSON: the fixed robot<-world and world<-receiver poses.

    Layout::

        {"t_r_f": {"translation_mm": [x, y, z],
                   "rotation_deg_fixed_xyz": [rx, ry, rz]},
         "t_f_s": {...}}
    """
    obj = json.loads(data)
    if not isinstance(obj, dict):
        raise ValueError("calibration must be a JSON object")
    _require_keys(obj, ("t_r_f", "t_f_s"), "calibration")

    def _load(key: str, parent: Frame, child: Frame) -> Transform4:
        if key not in obj:
            raise ValueError(f"calibration is missing {key!r}")
        entry = obj[key]
        if not isinstance(entry, dict):
            raise ValueError(f"calibration {key!r} must be an object")
        _require_keys(entry, ("translation_mm", "rotation_deg_fixed_xyz"), f"calibration {key}")
        try:
            t = np.asarray(entry["translation_mm"], dtype=float).reshape(3)
            deg = np.asarray(entry["rotation_deg_fixed_xyz"], dtype=float).reshape(3)
        except (KeyError, TypeError, ValueError):
            raise ValueError(
                f"calibration {key!r} needs 3-vectors translation_mm and rotation_deg_fixed_xyz"
            ) from None
        rx, ry, rz = np.radians(deg)
        return Transform4(rot_from_fixed_xyz(rx, ry, rz), t, parent, child)

    return CalibrationSet(_load("t_r_f", Frame.R, Frame.F), _load("t_f_s", Frame.F, Frame.S))


def _read(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _write_out(path: str | None, data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    if path is None:
        sys.stdout.write(data.decode("utf-8"))
    else:
        with open(path, "wb") as f:
            f.write(data)


def _config_from(args) -> PipelineConfig:
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if not path:
        return PipelineConfig()
    return load_config(_read(path))


def _parse_vector3(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"expected 'x,y,z', got {text!r}")
    v = np.array([float(p) for p in parts])
    n = float(np.linalg.norm(v))
    if not np.all(np.isfinite(v)) or n == 0.0:
        raise ValueError(f"direction must be finite and nonzero, got {text!r}")
    return v / n


def _parse_extras(items: Sequence[str]) -> tuple[tuple[str, str], ...]:
    out = []
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValueError(f"--extra needs KEY=VALUE, got {item!r}")
        out.append((key, value))
    return tuple(out)


def _cmd_synth(args) -> int:
    truth = fused_path_from_json(_read(args.truth))
    if truth.frame != Frame.S:
        raise ValueError("truth path must be in the receiver frame (S) for capture simulation")
    model = TrackerErrorModel(
        z_bias_max=args.z_bias_max,
        z_bias_range=args.z_bias_range,
        xy_noise_sigma=args.xy_noise,
        orient_noise_sigma=args.orient_noise,
        spike_rate=args.spike_rate,
        seed=args.seed,
    )
    series = synth_demo(truth, model, args.rate)
    _write_out(args.output, format_demo_csv(series))
    return 0


def _cmd_fuse(args) -> int:
    config = _config_from(args)
    cad = parse_cad(_read(args.cad))
    series = parse_demo(_read(args.demo))
    calib = load_calibration(_read(args.calib))

    series = filter_outliers(series, config.filter_window, config.filter_k)
    if config.resample_spacing_mm is not None:
        cad = resample_cad(cad, config.resample_spacing_mm)
    target = config.downsample_target
    if target is None:
        target = max(100, 2 * len(cad))
    target = max(2, min(int(target), len(series)))
    series = downsample(series, target)

    fused = fuse(cad, series)
    robot = to_robot_frame(fused, calib)
    _write_out(args.output, fused_path_to_json(robot))
    return 0


def _cmd_pathml_gen(args) -> int:
    fused = fused_path_from_json(_read(args.fused))
    config = _config_from(args)
    base = config.process

    process_type = args.process_type or (base.process_type.value if base else None)
    if process_type is None:
        raise ValueError("--process-type is required (or a 'process' block in the config)")

    def _pick(flag, attr):
        if flag is not None:
            return flag
        return getattr(base, attr) if base else None

    process = ProcessParameters(
        process_type=process_type,
        glue_flow_rate=_pick(args.glue_flow_rate, "glue_flow_rate"),
        wire_feed_rate=_pick(args.wire_feed_rate, "wire_feed_rate"),
        layer_height=_pick(args.layer_height, "layer_height"),
        extra=_parse_extras(args.extra) if args.extra else (base.extra if base else ()),
    )
    doc = build_document(fused, process, args.project)
    _write_out(args.output, write_xml(doc))
    return 0


def _cmd_pathml_validate(args) -> int:
    doc = parse_xml(_read(args.file))
    violations = validate_document(doc)
    for v in violations:
        print(v)
    return 1 if violations else 0


def _cmd_pathml_expand(args) -> int:
    doc = parse_xml(_read(args.file))
    direction = _parse_vector3(args.direction)
    out = expand_layers(doc, args.layers, direction)
    _write_out(args.output, write_xml(out))
    return 0


def _cmd_emit(args) -> int:
    doc = parse_xml(_read(args.file))
    doc_violations = validate_document(doc)
    if doc_violations:
        for v in doc_violations:
            print(v, file=sys.stderr)
        return 1
    config = _config_from(args)
    report = validate_path(doc, config.limits)
    if not report.passed:
        for v in report.violations:
            print(v, file=sys.stderr)
        return 1
    program = emit_program(doc, report)
    _write_out(args.output, program.text)
    return 0


def _cmd_report(args) -> int:
    executed = fused_path_from_json(_read(args.executed))
    nominal = fused_path_from_json(_read(args.nominal))
    config = _config_from(args)
    tolerance = args.tolerance if args.tolerance is not None else config.tolerance_mm
    sections = ()
    if args.sections:
        sections = tuple(float(s) for s in args.sections.split(","))
    rep = deviation_report(executed, nominal, sections, tolerance)
    _write_out(args.output, rep.to_json())
    return 0 if rep.within_tolerance else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathfuse",
        description="Fuse demonstrated tool motion with CAD paths into robot programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="simulate a tracker capture of a true path")
    p.add_argument("--truth", required=True, help="fused-path JSON, frame S")
    p.add_argument("--rate", type=float, required=True, help="sample rate in Hz")
    p.add_argument("--z-bias-max", type=float, default=60.0)
    p.add_argument("--z-bias-range", type=float, default=800.0)
    p.add_argument("--xy-noise", type=float, default=2.0)
    p.add_argument("--orient-noise", type=float, default=1.0)
    p.add_argument("--spike-rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fuse", help="fuse a demonstration with a CAD path")
    p.add_argument("--cad", required=True)
    p.add_argument("--demo", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_fuse)

    pathml = sub.add_parser("pathml", help="PathML document operations")
    psub = pathml.add_subparsers(dest="pathml_command", required=True)

    p = psub.add_parser("gen", help="wrap a robot-frame fused path as PathML")
    p.add_argument("--fused", required=True)
    p.add_argument("--project", required=True)
    p.add_argument("--process-type", choices=["adhesive", "welding", "other"])
    p.add_argument("--glue-flow-rate", type=float, help="ml/min")
    p.add_argument("--wire-feed-rate", type=float, help="mm/s")
    p.add_argument("--layer-height", type=float, help="mm")
    p.add_argument("--extra", action="append", metavar="KEY=VALUE")
    p.add_argument("--config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_pathml_gen)

    p = psub.add_parser("validate", help="check a document against all rules")
    p.add_argument("file")
    p.set_defaults(func=_cmd_pathml_validate)

    p = psub.add_parser("expand", help="replicate a single layer into a stack")
    p.add_argument("file")
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--direction", default="0,0,1", metavar="X,Y,Z")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_pathml_expand)

    p = sub.add_parser("emit", help="emit a neutral robot program")
    p.add_argument("file")
    p.add_argument("--config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_emit)

    p = sub.add_parser("report", help="deviation of an executed path from nominal")
    p.add_argument("--executed", required=True)
    p.add_argument("--nominal", required=True)
    p.add_argument("--sections", help="comma-separated breaks in (0,1)")
    p.add_argument("--tolerance", type=float, help="mm")
    p.add_argument("--config")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except (PathfuseError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
