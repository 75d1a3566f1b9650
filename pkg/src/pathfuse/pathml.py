"""PathML documents: an AutomationML/CAEX-style XML interchange for tool paths.

The document tree is ::

    CAEXFile FileName="<project>.aml"
      InstanceHierarchy Name="PathML"
        InternalElement Name="<project>"        (process Attributes)
          InternalElement Name="Layer_<i>"      (Attribute Index)
            InternalElement Name="Track_<j>"    (Attribute ToolActive)
              InternalElement Name="Point_<k>"  (X_mm ... Velocity_mm_s Attributes)

Every Attribute holds its value as the text of a single Value child.  Numeric
values are written with six decimals; angles are degrees, positions are
millimeters.  The writer is canonical: equal documents produce identical
bytes (UTF-8, LF line endings), so emitted files diff cleanly under version
control.

Dataclasses here are deliberately permissive: they hold whatever was parsed
or constructed, and ``validate_document`` reports every rule violation
instead of refusing to represent the data.
"""

from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import FrameMismatchError, ParseError, SchemaError, ValidationError
from .fusion import FusedPath
from .geometry import Frame

POINT_ATTRS = ("X_mm", "Y_mm", "Z_mm", "RX_deg", "RY_deg", "RZ_deg", "Velocity_mm_s")

RESERVED_PROCESS_ATTRS = frozenset(
    {"ProcessType", "GlueFlowRate_ml_min", "WireFeedRate_mm_s", "LayerHeight_mm"}
)


class ProcessType(str, Enum):
    ADHESIVE = "adhesive"
    WELDING = "welding"
    OTHER = "other"


@dataclass(frozen=True)
class ProcessParameters:
    """Process metadata carried alongside the geometry.

    ``glue_flow_rate`` is ml/min, ``wire_feed_rate`` mm/s, ``layer_height``
    mm.  ``extra`` is an ordered sequence of (name, text) pairs for
    free-form attributes; order is preserved through serialization.
    """

    process_type: ProcessType
    glue_flow_rate: float | None = None
    wire_feed_rate: float | None = None
    layer_height: float | None = None
    extra: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        pt = self.process_type
        if not isinstance(pt, ProcessType):
            try:
                pt = ProcessType(str(pt))
            except ValueError:
                raise ValueError(f"unknown process type {pt!r}") from None
        object.__setattr__(self, "process_type", pt)
        for name in ("glue_flow_rate", "wire_feed_rate", "layer_height"):
            v = getattr(self, name)
            object.__setattr__(self, name, None if v is None else float(v))
        extra = self.extra
        if isinstance(extra, Mapping):
            pairs = extra.items()
        else:
            pairs = extra
        object.__setattr__(
            self, "extra", tuple((str(k), str(v)) for k, v in pairs)
        )


@dataclass(frozen=True)
class PathPoint:
    """One commanded pose: position in mm, fixed-axis X-Y-Z angles in degrees."""

    x: float
    y: float
    z: float
    rx: float
    ry: float
    rz: float
    velocity: float

    def __post_init__(self):
        for name in ("x", "y", "z", "rx", "ry", "rz", "velocity"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class Track:
    """A continuous tool motion; ``tool_active`` says whether the tool works here."""

    name: str
    points: tuple[PathPoint, ...]
    tool_active: bool

    def __post_init__(self):
        object.__setattr__(self, "name", str(self.name))
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "tool_active", bool(self.tool_active))


@dataclass(frozen=True)
class Layer:
    """One pass of the process; multi-layer documents stack these by index."""

    name: str
    index: int
    tracks: tuple[Track, ...]

    def __post_init__(self):
        object.__setattr__(self, "name", str(self.name))
        object.__setattr__(self, "index", int(self.index))
        object.__setattr__(self, "tracks", tuple(self.tracks))


@dataclass(frozen=True)
class PathMLDocument:
    project_name: str
    process: ProcessParameters
    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "project_name", str(self.project_name))
        object.__setattr__(self, "layers", tuple(self.layers))


@dataclass(frozen=True)
class Violation:
    """One document rule violation found by validate_document."""

    path: str
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"{self.path}: {self.rule}: {self.detail}"


def build_document(
    path: FusedPath, process: ProcessParameters, project_name: str
) -> PathMLDocument:
    """Wrap a robot-frame fused path as a single-layer, single-track document.

    The one track is marked tool-active.  Raises ValidationError if the
    result would not validate (for example a process missing its required
    rate), FrameMismatchError if the path is not in robot coordinates.
    """
    if path.frame != Frame.R:
        raise FrameMismatchError(
            f"documents hold robot-frame paths; got frame {path.frame}"
        )
    points = []
    for i in range(len(path)):
        x, y, z = path.positions[i]
        rx, ry, rz = (math.degrees(a) for a in path.orientations[i])
        points.append(PathPoint(x, y, z, rx, ry, rz, float(path.speeds[i])))
    doc = PathMLDocument(
        project_name=project_name,
        process=process,
        layers=(Layer("Layer_0", 0, (Track("Track_0", tuple(points), True),)),),
    )
    bad = validate_document(doc)
    if bad:
        raise ValidationError(
            "document would be invalid: " + "; ".join(str(v) for v in bad)
        )
    return doc


def validate_document(doc: PathMLDocument) -> list[Violation]:
    """Check every document rule; returns all violations in a stable order."""
    out: list[Violation] = []
    p = doc.process

    if p.process_type == ProcessType.ADHESIVE and p.glue_flow_rate is None:
        out.append(Violation("process", "process", "adhesive requires GlueFlowRate_ml_min"))
    if p.process_type == ProcessType.WELDING and p.wire_feed_rate is None:
        out.append(Violation("process", "process", "welding requires WireFeedRate_mm_s"))
    for label, v in (
        ("GlueFlowRate_ml_min", p.glue_flow_rate),
        ("WireFeedRate_mm_s", p.wire_feed_rate),
    ):
        if v is not None and not math.isfinite(v):
            out.append(Violation("process", "finite", f"{label} is not finite"))
    if p.layer_height is not None and not (
        math.isfinite(p.layer_height) and p.layer_height > 0.0
    ):
        out.append(
            Violation("process", "process", f"LayerHeight_mm must be positive, got {p.layer_height}")
        )
    seen_extra = set()
    for k, _ in p.extra:
        if k in RESERVED_PROCESS_ATTRS:
            out.append(
                Violation("process", "extra", f"extra key {k!r} collides with a reserved attribute")
            )
        if k in seen_extra:
            out.append(Violation("process", "extra", f"duplicate extra key {k!r}"))
        seen_extra.add(k)

    if not doc.layers:
        out.append(Violation("document", "structure", "document has no layers"))

    seen_layers = set()
    for layer in doc.layers:
        lpath = layer.name
        if layer.name in seen_layers:
            out.append(Violation("document", "name", f"duplicate layer name {layer.name!r}"))
        seen_layers.add(layer.name)
        if layer.index < 0:
            out.append(Violation(lpath, "index", f"layer index must be >= 0, got {layer.index}"))
        if not layer.tracks:
            out.append(Violation(lpath, "structure", "layer has no tracks"))
        seen_tracks = set()
        for track in layer.tracks:
            tpath = f"{lpath}/{track.name}"
            if track.name in seen_tracks:
                out.append(Violation(lpath, "name", f"duplicate track name {track.name!r}"))
            seen_tracks.add(track.name)
            if len(track.points) < 2:
                out.append(
                    Violation(tpath, "structure", f"track has {len(track.points)} point(s), needs at least 2")
                )
            for k, pt in enumerate(track.points):
                ppath = f"{tpath}/Point_{k}"
                vals = (pt.x, pt.y, pt.z, pt.rx, pt.ry, pt.rz, pt.velocity)
                if not all(math.isfinite(v) for v in vals):
                    out.append(Violation(ppath, "finite", "point has a non-finite field"))
                elif pt.velocity < 0.0:
                    out.append(
                        Violation(ppath, "velocity", f"velocity must be >= 0, got {pt.velocity}")
                    )
    return out


def _fmt6(v: float) -> str:
    s = f"{v:.6f}"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]  # -0.000000 and 0.000000 mean the same number
    return s


_TEXT_ENTITIES = {"\r": "&#13;"}


def _attr_line(indent: int, name: str, text: str) -> str:
    body = escape(text, _TEXT_ENTITIES)
    return f'{" " * indent}<Attribute Name={quoteattr(name)}><Value>{body}</Value></Attribute>'


def write_xml(doc: PathMLDocument) -> bytes:
    """Serialize a valid document to canonical XML bytes.

    Equal documents yield identical bytes.  Invalid documents are refused
    with a ValidationError listing the problems.
    """
    bad = validate_document(doc)
    if bad:
        raise ValidationError(
            "cannot serialize an invalid document: " + "; ".join(str(v) for v in bad)
        )

    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(f"<CAEXFile FileName={quoteattr(doc.project_name + '.aml')}>")
    lines.append('  <InstanceHierarchy Name="PathML">')
    lines.append(f"    <InternalElement Name={quoteattr(doc.project_name)}>")

    p = doc.process
    lines.append(_attr_line(6, "ProcessType", p.process_type.value))
    if p.glue_flow_rate is not None:
        lines.append(_attr_line(6, "GlueFlowRate_ml_min", _fmt6(p.glue_flow_rate)))
    if p.wire_feed_rate is not None:
        lines.append(_attr_line(6, "WireFeedRate_mm_s", _fmt6(p.wire_feed_rate)))
    if p.layer_height is not None:
        lines.append(_attr_line(6, "LayerHeight_mm", _fmt6(p.layer_height)))
    for k, v in p.extra:
        lines.append(_attr_line(6, k, v))

    for layer in doc.layers:
        lines.append(f"      <InternalElement Name={quoteattr(layer.name)}>")
        lines.append(_attr_line(8, "Index", str(layer.index)))
        for track in layer.tracks:
            lines.append(f"        <InternalElement Name={quoteattr(track.name)}>")
            lines.append(_attr_line(10, "ToolActive", "true" if track.tool_active else "false"))
            for k, pt in enumerate(track.points):
                lines.append(f'          <InternalElement Name="Point_{k}">')
                for attr, val in zip(POINT_ATTRS, (pt.x, pt.y, pt.z, pt.rx, pt.ry, pt.rz, pt.velocity)):
                    lines.append(_attr_line(12, attr, _fmt6(val)))
                lines.append("          </InternalElement>")
            lines.append("        </InternalElement>")
        lines.append("      </InternalElement>")

    lines.append("    </InternalElement>")
    lines.append("  </InstanceHierarchy>")
    lines.append("</CAEXFile>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _attributes(elem: ET.Element, where: str) -> dict[str, str]:
    """Ordered Name -> Value text for an element's Attribute children."""
    out: dict[str, str] = {}
    for child in elem:
        if child.tag != "Attribute":
            continue
        name = child.get("Name")
        if name is None:
            raise SchemaError(f"{where}: Attribute element without a Name")
        if name in out:
            raise SchemaError(f"{where}: duplicate attribute {name!r}")
        value = child.find("Value")
        if value is None:
            raise SchemaError(f"{where}: attribute {name!r} has no Value child")
        out[name] = value.text or ""
    return out


def _internal_elements(elem: ET.Element, where: str) -> list[ET.Element]:
    out = []
    for child in elem:
        if child.tag == "InternalElement":
            out.append(child)
        elif child.tag != "Attribute":
            raise SchemaError(f"{where}: unexpected element <{child.tag}>")
    return out


def _named(elem: ET.Element, where: str) -> str:
    name = elem.get("Name")
    if name is None:
        raise SchemaError(f"{where}: InternalElement without a Name")
    return name


def _parse_float(text: str, key: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SchemaError(f"{where}: {key} is not a number: {text!r}") from None


def parse_xml(data: bytes | str) -> PathMLDocument:
    """Parse PathML XML into a document.

    Structural problems raise SchemaError (a ParseError subtype); malformed
    XML raises ParseError with the line number.  Semantic rules are *not*
    checked here; run validate_document on the result.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = ET.fromstring(data)
    except ET.ParseError as e:
        line = e.position[0] if e.position else None
        raise ParseError(f"malformed XML: {e}", line=line) from None

    if root.tag != "CAEXFile":
        raise SchemaError(f"root element must be <CAEXFile>, got <{root.tag}>")
    if root.get("FileName") is None:
        raise SchemaError("CAEXFile requires a FileName attribute")
    children = list(root)
    if len(children) != 1 or children[0].tag != "InstanceHierarchy":
        raise SchemaError("CAEXFile must contain exactly one InstanceHierarchy")
    hierarchy = children[0]
    if hierarchy.get("Name") != "PathML":
        raise SchemaError(
            f"InstanceHierarchy must be named 'PathML', got {hierarchy.get('Name')!r}"
        )

    projects = list(hierarchy)
    if len(projects) != 1 or projects[0].tag != "InternalElement":
        raise SchemaError("InstanceHierarchy must contain exactly one project element")
    project = projects[0]
    project_name = _named(project, "project")

    attrs = _attributes(project, "project")
    stray = [k for k in POINT_ATTRS if k in attrs]
    if stray:
        raise SchemaError(f"project: point attribute {stray[0]!r} at project level; "
                          "point attributes belong inside a Point element")
    if "ProcessType" not in attrs:
        raise SchemaError("project: missing ProcessType attribute")
    try:
        process_type = ProcessType(attrs.pop("ProcessType"))
    except ValueError:
        raise SchemaError("project: unknown process type") from None
    kwargs = {}
    for field, key in (
        ("glue_flow_rate", "GlueFlowRate_ml_min"),
        ("wire_feed_rate", "WireFeedRate_mm_s"),
        ("layer_height", "LayerHeight_mm"),
    ):
        if key in attrs:
            kwargs[field] = _parse_float(attrs.pop(key), key, "project")
    process = ProcessParameters(
        process_type=process_type, extra=tuple(attrs.items()), **kwargs
    )

    layers = []
    for ordinal, layer_elem in enumerate(_internal_elements(project, "project")):
        lname = _named(layer_elem, "layer")
        lattrs = _attributes(layer_elem, lname)
        stray = [k for k in POINT_ATTRS if k in lattrs]
        if stray:
            raise SchemaError(f"{lname}: point attribute {stray[0]!r} at layer level; "
                              "point attributes belong inside a Point element")
        index = ordinal
        if "Index" in lattrs:
            text = lattrs.pop("Index")
            try:
                index = int(text)
            except ValueError:
                raise SchemaError(f"{lname}: Index is not an integer: {text!r}") from None
        if lattrs:
            raise SchemaError(f"{lname}: unexpected layer attribute {next(iter(lattrs))!r}")

        tracks = []
        for track_elem in _internal_elements(layer_elem, lname):
            tname = _named(track_elem, f"{lname}/track")
            where = f"{lname}/{tname}"
            tattrs = _attributes(track_elem, where)
            stray = [k for k in POINT_ATTRS if k in tattrs]
            if stray:
                raise SchemaError(f"{where}: point attribute {stray[0]!r} at track level; "
                                  "point attributes belong inside a Point element")
            if "ToolActive" not in tattrs:
                raise SchemaError(f"{where}: missing ToolActive attribute")
            flag = tattrs.pop("ToolActive").strip().lower()
            if flag not in ("true", "false"):
                raise SchemaError(f"{where}: ToolActive must be true or false, got {flag!r}")
            if tattrs:
                raise SchemaError(f"{where}: unexpected track attribute {next(iter(tattrs))!r}")

            points = []
            for point_elem in _internal_elements(track_elem, where):
                pname = _named(point_elem, f"{where}/point")
                pwhere = f"{where}/{pname}"
                if len(_internal_elements(point_elem, pwhere)) != 0:
                    raise SchemaError(f"{pwhere}: a Point cannot contain further elements")
                pattrs = _attributes(point_elem, pwhere)
                for key in POINT_ATTRS:
                    if key not in pattrs:
                        raise SchemaError(f"{pwhere}: missing point attribute {key}")
                vals = [_parse_float(pattrs[key], key, pwhere) for key in POINT_ATTRS]
                for key in pattrs:
                    if key not in POINT_ATTRS:
                        raise SchemaError(f"{pwhere}: unexpected point attribute {key!r}")
                points.append(PathPoint(*vals))
            tracks.append(Track(tname, tuple(points), flag == "true"))
        layers.append(Layer(lname, index, tuple(tracks)))

    return PathMLDocument(project_name, process, tuple(layers))


def _numbered_name(base: str, k: int) -> str:
    m = re.match(r"^(.*?)(\d+)$", base)
    if m:
        return f"{m.group(1)}{k}"
    return f"{base}_{k}"


def expand_layers(doc: PathMLDocument, n_layers: int, direction) -> PathMLDocument:
    """Replicate a single-layer document into ``n_layers`` stacked layers.

    Layer k is the base layer translated by ``k * layer_height * direction``
    (direction must be a unit vector).  Layers are (re)numbered 0..n-1 and
    named by the base layer's name pattern.  ``n_layers == 1`` returns the
    document unchanged.
    """
    n_layers = int(n_layers)
    if n_layers < 1:
        raise ValueError(f"n_layers must be >= 1, got {n_layers}")
    if len(doc.layers) != 1:
        raise ValueError(f"expansion needs a single-layer document, got {len(doc.layers)} layers")
    h = doc.process.layer_height
    if h is None or not (math.isfinite(h) and h > 0.0):
        raise ValueError("expansion requires a positive LayerHeight_mm in the process")
    d = np.asarray(direction, dtype=float).reshape(3)
    if not np.all(np.isfinite(d)) or abs(float(np.linalg.norm(d)) - 1.0) > 1e-9:
        raise ValueError("direction must be a finite unit vector")
    if n_layers == 1:
        return doc

    base = doc.layers[0]
    layers = []
    for k in range(n_layers):
        off = k * h * d
        tracks = []
        for track in base.tracks:
            points = tuple(
                PathPoint(
                    pt.x + off[0], pt.y + off[1], pt.z + off[2],
                    pt.rx, pt.ry, pt.rz, pt.velocity,
                )
                for pt in track.points
            )
            tracks.append(Track(track.name, points, track.tool_active))
        layers.append(Layer(_numbered_name(base.name, k), k, tuple(tracks)))
    return PathMLDocument(doc.project_name, doc.process, tuple(layers))
