"""Robot-program emission, kinematic limit checks, and deviation reports.

The neutral program dialect is deliberately tiny so per-vendor translators
stay trivial::

    # comment
    SET_IO TOOL 1
    MOVEL <x> <y> <z> <rx> <ry> <rz> V=<speed>
    SET_IO TOOL 0

Positions are mm, angles degrees, speed mm/s, all with three decimals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import FrameMismatchError
from .fusion import FusedPath
from .geometry import rot_from_fixed_xyz, rotation_angle
from .pathml import PathMLDocument


class Dialect(str, Enum):
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class PathLimits:
    """Kinematic limits a path must respect before emission.

    ``max_step_mm`` bounds the jump between consecutive points,
    ``max_orient_step_deg`` bounds the relative rotation between them,
    and the workspace is a sphere.
    """

    max_step_mm: float = 50.0
    max_speed_mm_s: float = 1000.0
    workspace_center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    workspace_radius_mm: float = 3000.0
    max_orient_step_deg: float = 30.0

    def __post_init__(self):
        for name in ("max_step_mm", "max_speed_mm_s", "workspace_radius_mm", "max_orient_step_deg"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, v)
        c = tuple(float(v) for v in self.workspace_center)
        if len(c) != 3 or not all(math.isfinite(v) for v in c):
            raise ValueError(f"workspace_center must be a finite 3-vector, got {self.workspace_center!r}")
        object.__setattr__(self, "workspace_center", c)


@dataclass(frozen=True)
class LimitViolation:
    """One limit violation, addressed by (layer, track, point) position."""

    layer: int
    track: int
    point: int
    rule: str  # "step" | "orient_step" | "reachability" | "speed"
    measured: float
    limit: float

    def __str__(self) -> str:
        return (
            f"layer {self.layer} track {self.track} point {self.point}: "
            f"{self.rule} {self.measured:.3f} exceeds limit {self.limit:.3f}"
        )


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[LimitViolation, ...]

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))

    @property
    def passed(self) -> bool:
        return not self.violations


def validate_path(doc: PathMLDocument, limits: PathLimits) -> ValidationReport:
    """Check every point of a document against kinematic limits.

    Violations come out in traversal order (layers as listed, then tracks,
    then points); for one point the pair rules (step, orient_step) precede
    the point rules (reachability, speed).
    """
    center = np.array(limits.workspace_center)
    out: list[LimitViolation] = []
    for li, layer in enumerate(doc.layers):
        for ti, track in enumerate(layer.tracks):
            prev = None
            for pi, pt in enumerate(track.points):
                pos = np.array([pt.x, pt.y, pt.z])
                rot = _point_rot(pt)
                if prev is not None:
                    step = float(np.linalg.norm(pos - prev[0]))
                    if step > limits.max_step_mm:
                        out.append(LimitViolation(li, ti, pi, "step", step, limits.max_step_mm))
                    turn = math.degrees(rotation_angle(prev[1].T @ rot))
                    if turn > limits.max_orient_step_deg:
                        out.append(
                            LimitViolation(li, ti, pi, "orient_step", turn, limits.max_orient_step_deg)
                        )
                reach = float(np.linalg.norm(pos - center))
                if reach > limits.workspace_radius_mm:
                    out.append(
                        LimitViolation(li, ti, pi, "reachability", reach, limits.workspace_radius_mm)
                    )
                if pt.velocity > limits.max_speed_mm_s:
                    out.append(
                        LimitViolation(li, ti, pi, "speed", pt.velocity, limits.max_speed_mm_s)
                    )
                prev = (pos, rot)
    return ValidationReport(tuple(out))


def _point_rot(pt) -> np.ndarray:
    return rot_from_fixed_xyz(math.radians(pt.rx), math.radians(pt.ry), math.radians(pt.rz))


@dataclass(frozen=True)
class RobotProgram:
    dialect: Dialect
    lines: tuple[str, ...]

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _fmt3(v: float) -> str:
    s = f"{v:.3f}"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def _comment(text: str) -> str:
    # comments are single lines; collapse anything that would break that
    return "# " + " ".join(str(text).split())


def emit_program(doc: PathMLDocument, validation: ValidationReport | None = None) -> RobotProgram:
    """Emit the neutral-dialect program for a document.

    If a validation report is supplied it must have passed; emission refuses
    to encode a path known to violate limits.  Layers are emitted in index
    order; tool-active tracks are wrapped in SET_IO TOOL 1/0.
    """
    if validation is not None and not validation.passed:
        raise ValueError(
            f"refusing to emit: validation failed with {len(validation.violations)} violation(s)"
        )
    total_points = sum(len(t.points) for l in doc.layers for t in l.tracks)
    if total_points == 0:
        raise ValueError("document has no points to emit")

    p = doc.process
    lines = [_comment(f"program: {doc.project_name}"), _comment(f"process_type: {p.process_type.value}")]
    if p.glue_flow_rate is not None:
        lines.append(_comment(f"glue_flow_rate_ml_min: {_fmt3(p.glue_flow_rate)}"))
    if p.wire_feed_rate is not None:
        lines.append(_comment(f"wire_feed_rate_mm_s: {_fmt3(p.wire_feed_rate)}"))
    if p.layer_height is not None:
        lines.append(_comment(f"layer_height_mm: {_fmt3(p.layer_height)}"))
    for k, v in p.extra:
        lines.append(_comment(f"{k}: {v}"))

    for layer in sorted(doc.layers, key=lambda l: l.index):
        lines.append(_comment(f"layer: {layer.name}"))
        for track in layer.tracks:
            if track.tool_active:
                lines.append("SET_IO TOOL 1")
            for pt in track.points:
                coords = " ".join(_fmt3(v) for v in (pt.x, pt.y, pt.z, pt.rx, pt.ry, pt.rz))
                lines.append(f"MOVEL {coords} V={_fmt3(pt.velocity)}")
            if track.tool_active:
                lines.append("SET_IO TOOL 0")

    return RobotProgram(Dialect.NEUTRAL, tuple(lines))


@dataclass(frozen=True)
class SectionDeviation:
    label: str
    max_deviation_mm: float
    point_count: int

    @property
    def empty(self) -> bool:
        return self.point_count == 0


@dataclass(frozen=True)
class DeviationReport:
    sections: tuple[SectionDeviation, ...]
    overall_max_mm: float
    tolerance_mm: float
    within_tolerance: bool

    def to_json(self) -> str:
        obj = {
            "tolerance_mm": self.tolerance_mm,
            "overall_max_mm": self.overall_max_mm,
            "within_tolerance": self.within_tolerance,
            "sections": [
                {
                    "label": s.label,
                    "max_deviation_mm": s.max_deviation_mm,
                    "point_count": s.point_count,
                }
                for s in self.sections
            ],
        }
        return json.dumps(obj, indent=2) + "\n"


def _point_to_polyline_mm(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Min distance of each point to any segment of a polyline."""
    a = poly[:-1]
    d = poly[1:] - a
    dd = np.einsum("ij,ij->i", d, d)
    dd_safe = np.where(dd > 0.0, dd, 1.0)  # zero-length segments act as points
    out = np.empty(len(points))
    for i, p in enumerate(points):
        ap = p - a
        t = np.clip(np.einsum("ij,ij->i", ap, d) / dd_safe, 0.0, 1.0)
        t = np.where(dd > 0.0, t, 0.0)
        closest = a + t[:, None] * d
        out[i] = np.min(np.linalg.norm(p - closest, axis=1))
    return out


def deviation_report(
    executed: FusedPath,
    nominal: FusedPath,
    section_breaks: tuple[float, ...] = (),
    tolerance_mm: float = 4.0,
) -> DeviationReport:
    """Positional deviation of an executed path from a nominal one.

    Each executed point's deviation is its distance to the nearest point of
    the nominal polyline (closing segments included for closed paths).
    Sections split the executed path at the given normalized arc-length
    breaks, which must be strictly increasing and inside (0, 1); deviations
    are reported per section and overall against ``tolerance_mm``.  The
    default tolerance is the 4 mm bound of the most permissive process this
    pipeline targets.
    """
    if executed.frame != nominal.frame:
        raise FrameMismatchError(
            f"paths are in different frames: {executed.frame} vs {nominal.frame}"
        )
    if not (math.isfinite(tolerance_mm) and tolerance_mm > 0.0):
        raise ValueError(f"tolerance_mm must be positive, got {tolerance_mm!r}")
    breaks = tuple(float(b) for b in section_breaks)
    if any(not (0.0 < b < 1.0) for b in breaks):
        raise ValueError(f"section breaks must lie strictly inside (0, 1), got {breaks}")
    if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
        raise ValueError(f"section breaks must strictly increase, got {breaks}")

    nom_poly = nominal.positions
    if nominal.closed:
        nom_poly = np.vstack([nom_poly, nom_poly[:1]])
    devs = _point_to_polyline_mm(executed.positions, nom_poly)

    # executed progress for sectioning; degenerate (zero-length) paths land in section 1
    seg = np.linalg.norm(np.diff(executed.positions, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if executed.closed:
        total = total + float(np.linalg.norm(executed.positions[0] - executed.positions[-1]))
    params = cum / total if total > 0.0 else np.zeros(len(cum))

    idx = np.searchsorted(np.array(breaks), params, side="right") if breaks else np.zeros(
        len(params), dtype=int
    )
    sections = []
    for s in range(len(breaks) + 1):
        mask = idx == s
        count = int(np.sum(mask))
        sections.append(
            SectionDeviation(
                label=f"section_{s + 1}",
                max_deviation_mm=float(np.max(devs[mask])) if count else 0.0,
                point_count=count,
            )
        )
    overall = float(np.max(devs))
    return DeviationReport(
        sections=tuple(sections),
        overall_max_mm=overall,
        tolerance_mm=float(tolerance_mm),
        within_tolerance=bool(overall <= tolerance_mm),
    )
