"""Canonical stroke records: parsing, validation, serialization, hashing.

A stroke record is one captured pen stroke with its full trajectory
(coordinate, pressure, and thickness arrays of equal length), brush
parameters, a functional category label, and timing.  Records arrive as
JSON objects (single object or an array of objects per file, UTF-8).

Canonical form
--------------
``serialize_stroke`` renders a record as canonical JSON: object keys
sorted lexicographically, no insignificant whitespace, reals as the
shortest decimal text that round-trips exactly, UTF-8, arrays coerced to
floats.  The canonical form exists for content addressing; parsers accept
any well-formed JSON layout.

``stroke_content_id`` is the SHA-256 hex digest of the canonical bytes
with the volatile fields ``_id`` and ``image_filename`` removed, so two
captures of the same ink hash identically regardless of database ids.

Unknown JSON fields are preserved verbatim in ``extras`` (and
``BrushParams.extras`` for nested unknowns) so records round-trip through
tools that do not understand them.
"""

from __future__ import annotations

import enum
import json
import hashlib
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Iterable, Mapping

from .errors import MalformedInput, SchemaViolation


class StrokeCategory(str, enum.Enum):
    """The six functional stroke classes.

    ``hatches`` is a training-time alias for {shading, shadow}; it is never
    stored on a record.  ``annotation`` has no training alias.
    """

    CONSTRAINING = "constraining"
    DEFINING = "defining"
    DETAILING = "detailing"
    SHADING = "shading"
    SHADOW = "shadow"
    ANNOTATION = "annotation"

    @property
    def training_label(self) -> str | None:
        """4-class label used by classifiers, or None for annotation."""
        if self in (StrokeCategory.SHADING, StrokeCategory.SHADOW):
            return "hatches"
        if self is StrokeCategory.ANNOTATION:
            return None
        return self.value


# Fixed class order for classifiers and tie-breaking.
TRAINING_CLASSES = ("constraining", "defining", "detailing", "hatches")

_BRUSH_KEYS = {"size", "thinning", "smoothing", "streamline", "simulatePressure"}
_RECORD_KEYS = {
    "_id",
    "username",
    "category",
    "stroke_number",
    "timestamp",
    "x_coordinates",
    "y_coordinates",
    "pressure_values",
    "thickness_values",
    "t_offsets_ms",
    "color",
    "grayscale_value",
    "opacity",
    "stroke_parameters",
    "path",
    "image_filename",
}

THICKNESS_MIN = 0.5
THICKNESS_MAX = 20.0


@dataclass(frozen=True)
class BrushParams:
    """Brush configuration active when the stroke was drawn.

    thinning in [-1, 1]; smoothing and streamline in [0, 1].
    """

    size: float = 1.0
    thinning: float = 0.0
    smoothing: float = 0.5
    streamline: float = 0.5
    simulate_pressure: bool = False
    extras: dict = field(default_factory=dict)

    def validate(self) -> None:
        for name in ("size", "thinning", "smoothing", "streamline"):
            v = getattr(self, name)
            if not isinstance(v, float) or not math.isfinite(v):
                raise SchemaViolation(f"stroke_parameters.{name} must be a finite real", field=name)
        if not -1.0 <= self.thinning <= 1.0:
            raise SchemaViolation("thinning outside [-1, 1]", field="thinning")
        if not 0.0 <= self.smoothing <= 1.0:
            raise SchemaViolation("smoothing outside [0, 1]", field="smoothing")
        if not 0.0 <= self.streamline <= 1.0:
            raise SchemaViolation("streamline outside [0, 1]", field="streamline")
        if not isinstance(self.simulate_pressure, bool):
            raise SchemaViolation("simulatePressure must be boolean", field="simulatePressure")


@dataclass(frozen=True)
class StrokeRecord:
    """One captured stroke.

    All trajectory arrays have equal length >= 1.  ``t_offsets_ms``, when
    present, is non-decreasing and starts at 0 (milliseconds since stroke
    start); when absent, kinematics assume uniform sampling.  Timestamps
    are UTC, stored naive.
    """

    id: str
    username: str
    category: StrokeCategory
    stroke_number: int
    timestamp: datetime
    x_coordinates: tuple[float, ...]
    y_coordinates: tuple[float, ...]
    pressure_values: tuple[float, ...]
    thickness_values: tuple[float, ...]
    color: str
    grayscale_value: float
    opacity: float
    stroke_parameters: BrushParams
    t_offsets_ms: tuple[float, ...] | None = None
    path: str | None = None
    image_filename: str | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def n_points(self) -> int:
        return len(self.x_coordinates)

    def validate(self) -> None:
        if not isinstance(self.id, str):
            raise SchemaViolation("_id must be a string", field="_id")
        if not isinstance(self.username, str):
            raise SchemaViolation("username must be a string", field="username")
        if not isinstance(self.category, StrokeCategory):
            raise SchemaViolation("unknown category", field="category")
        if not isinstance(self.stroke_number, int) or isinstance(self.stroke_number, bool) or self.stroke_number < 1:
            raise SchemaViolation("stroke_number must be a positive integer", field="stroke_number")
        if not isinstance(self.timestamp, datetime) or self.timestamp.tzinfo is not None:
            raise SchemaViolation("timestamp must be a naive UTC datetime", field="timestamp")

        n = len(self.x_coordinates)
        if n < 1:
            raise SchemaViolation("x_coordinates must be non-empty", field="x_coordinates")
        for name in ("y_coordinates", "pressure_values", "thickness_values"):
            if len(getattr(self, name)) != n:
                raise SchemaViolation(f"{name} length differs from x_coordinates", field=name)
        for name in ("x_coordinates", "y_coordinates", "pressure_values", "thickness_values"):
            for v in getattr(self, name):
                if not isinstance(v, float) or not math.isfinite(v):
                    raise SchemaViolation(f"{name} must hold finite reals", field=name)
        for v in self.pressure_values:
            if not 0.0 <= v <= 1.0:
                raise SchemaViolation("pressure outside [0, 1]", field="pressure_values")
        for v in self.thickness_values:
            if not THICKNESS_MIN <= v <= THICKNESS_MAX:
                raise SchemaViolation(
                    f"thickness outside [{THICKNESS_MIN}, {THICKNESS_MAX}]", field="thickness_values"
                )
        if self.t_offsets_ms is not None:
            t = self.t_offsets_ms
            if len(t) != n:
                raise SchemaViolation("t_offsets_ms length differs from x_coordinates", field="t_offsets_ms")
            if t[0] != 0.0:
                raise SchemaViolation("t_offsets_ms must start at 0", field="t_offsets_ms")
            for a, b in zip(t, t[1:]):
                if not (math.isfinite(b) and b >= a):
                    raise SchemaViolation("t_offsets_ms must be non-decreasing", field="t_offsets_ms")

        if not _is_hex_color(self.color):
            raise SchemaViolation("color must be a hex color string", field="color")
        if not isinstance(self.grayscale_value, float) or not 0.0 <= self.grayscale_value <= 1.0:
            raise SchemaViolation("grayscale_value outside [0, 1]", field="grayscale_value")
        if not isinstance(self.opacity, float) or not 0.0 <= self.opacity <= 1.0:
            raise SchemaViolation("opacity outside [0, 1]", field="opacity")
        self.stroke_parameters.validate()
        if self.path is not None and not isinstance(self.path, str):
            raise SchemaViolation("path must be a string", field="path")
        if self.image_filename is not None and not isinstance(self.image_filename, str):
            raise SchemaViolation("image_filename must be a string", field="image_filename")
        for key in self.extras:
            if key in _RECORD_KEYS:
                raise SchemaViolation(f"extras shadows known field {key}", field=key)


def _is_hex_color(value: Any) -> bool:
    if not isinstance(value, str) or not value.startswith("#"):
        return False
    digits = value[1:]
    if len(digits) not in (3, 4, 6, 8):
        return False
    return all(c in "0123456789abcdefABCDEF" for c in digits)


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 text -> naive UTC datetime.  Accepts 'Z' and offsets."""
    if not isinstance(text, str):
        raise SchemaViolation("timestamp must be ISO-8601 text", field="timestamp")
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise SchemaViolation(f"timestamp not ISO-8601: {exc}", field="timestamp") from None
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts


def format_timestamp(ts: datetime) -> str:
    """Canonical timestamp text: naive UTC ISO-8601 with microseconds."""
    return ts.isoformat(timespec="microseconds")


def _float_list(value: Any, name: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise SchemaViolation(f"{name} must be an array", field=name)
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaViolation(f"{name} must hold numbers", field=name)
        out.append(float(v))
    return tuple(out)


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(f"{name} must be a number", field=name)
    return float(value)


def record_from_obj(obj: Mapping[str, Any]) -> StrokeRecord:
    def require(key: str) -> Any:
        if key not in obj:
            raise SchemaViolation(f"missing field {key}", field=key)
        return obj[key]

    category_raw = require("category")
    try:
        category = StrokeCategory(category_raw)
    except ValueError:
        raise SchemaViolation(f"unknown category {category_raw!r}", field="category") from None

    stroke_number = require("stroke_number")
    if isinstance(stroke_number, bool) or not isinstance(stroke_number, int):
        raise SchemaViolation("stroke_number must be an integer", field="stroke_number")

    params_raw = require("stroke_parameters")
    if not isinstance(params_raw, Mapping):
        raise SchemaViolation("stroke_parameters must be an object", field="stroke_parameters")
    brush_extras = {k: v for k, v in params_raw.items() if k not in _BRUSH_KEYS}
    params = BrushParams(
        size=_number(params_raw.get("size", 1.0), "size"),
        thinning=_number(params_raw.get("thinning", 0.0), "thinning"),
        smoothing=_number(params_raw.get("smoothing", 0.5), "smoothing"),
        streamline=_number(params_raw.get("streamline", 0.5), "streamline"),
        simulate_pressure=params_raw.get("simulatePressure", False),
        extras=brush_extras,
    )

    t_offsets = None
    if "t_offsets_ms" in obj:
        t_offsets = _float_list(obj["t_offsets_ms"], "t_offsets_ms")

    ident = require("_id")
    if not isinstance(ident, str):
        raise SchemaViolation("_id must be a string", field="_id")
    username = require("username")
    if not isinstance(username, str):
        raise SchemaViolation("username must be a string", field="username")

    extras = {k: v for k, v in obj.items() if k not in _RECORD_KEYS}
    return StrokeRecord(
        id=ident,
        username=username,
        category=category,
        stroke_number=stroke_number,
        timestamp=parse_timestamp(require("timestamp")),
        x_coordinates=_float_list(require("x_coordinates"), "x_coordinates"),
        y_coordinates=_float_list(require("y_coordinates"), "y_coordinates"),
        pressure_values=_float_list(require("pressure_values"), "pressure_values"),
        thickness_values=_float_list(require("thickness_values"), "thickness_values"),
        color=require("color"),
        grayscale_value=_number(require("grayscale_value"), "grayscale_value"),
        opacity=_number(require("opacity"), "opacity"),
        stroke_parameters=params,
        t_offsets_ms=t_offsets,
        path=obj.get("path"),
        image_filename=obj.get("image_filename"),
        extras=extras,
    )


def parse_stroke(data: bytes | str) -> StrokeRecord:
    """Parse one stroke from JSON text (an object, or an array holding one)."""
    records = parse_strokes(data)
    if len(records) != 1:
        raise MalformedInput(f"expected one stroke record, found {len(records)}")
    return records[0]


def parse_strokes(data: bytes | str) -> list[StrokeRecord]:
    """Parse a JSON object or array of objects into stroke records."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInput(f"input is not UTF-8: {exc}") from None
    try:
        parsed = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"input is not JSON: {exc}") from None
    if isinstance(parsed, Mapping):
        items: Iterable[Any] = [parsed]
    elif isinstance(parsed, list):
        items = parsed
    else:
        raise MalformedInput("top-level JSON must be an object or array of objects")
    records = []
    for item in items:
        if not isinstance(item, Mapping):
            raise MalformedInput("array elements must be JSON objects")
        records.append(record_from_obj(item))
    return records


def record_to_obj(record: StrokeRecord) -> dict[str, Any]:
    """Record -> plain JSON-ready dict using the wire field names."""
    params = record.stroke_parameters
    obj: dict[str, Any] = {
        "_id": record.id,
        "username": record.username,
        "category": record.category.value,
        "stroke_number": record.stroke_number,
        "timestamp": format_timestamp(record.timestamp),
        "x_coordinates": list(record.x_coordinates),
        "y_coordinates": list(record.y_coordinates),
        "pressure_values": list(record.pressure_values),
        "thickness_values": list(record.thickness_values),
        "color": record.color,
        "grayscale_value": record.grayscale_value,
        "opacity": record.opacity,
        "stroke_parameters": {
            "size": params.size,
            "thinning": params.thinning,
            "smoothing": params.smoothing,
            "streamline": params.streamline,
            "simulatePressure": params.simulate_pressure,
            **params.extras,
        },
    }
    if record.t_offsets_ms is not None:
        obj["t_offsets_ms"] = list(record.t_offsets_ms)
    if record.path is not None:
        obj["path"] = record.path
    if record.image_filename is not None:
        obj["image_filename"] = record.image_filename
    obj.update(record.extras)
    return obj


def canonical_json(value: Any) -> bytes:
    """Canonical JSON bytes: sorted keys, no whitespace, shortest reals."""
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def serialize_stroke(record: StrokeRecord) -> bytes:
    """Canonical bytes for a record; identical records yield identical bytes."""
    record.validate()
    return canonical_json(record_to_obj(record))


def stroke_content_bytes(record: StrokeRecord) -> bytes:
    """Canonical bytes with volatile identity fields (_id, image_filename) removed.

    Memoized on the record (records are immutable values), so repeated
    content addressing of the same stroke costs one dict lookup."""
    memo = record.__dict__.get("_content_bytes")
    if memo is None:
        record.validate()
        obj = record_to_obj(record)
        obj.pop("_id", None)
        obj.pop("image_filename", None)
        memo = canonical_json(obj)
        object.__setattr__(record, "_content_bytes", memo)
    return memo


def stroke_content_id(record: StrokeRecord) -> str:
    """SHA-256 hex digest of the identity-stripped canonical bytes."""
    return hashlib.sha256(stroke_content_bytes(record)).hexdigest()


def record_from_content_bytes(content_id: str, data: bytes) -> StrokeRecord:
    """Rebuild a record from stored content bytes, adopting the content id as _id."""
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"stored stroke bytes are not JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedInput("stored stroke bytes must hold a JSON object")
    obj.setdefault("_id", content_id)
    return record_from_obj(obj)


def load_strokes(path) -> list[StrokeRecord]:
    with open(path, "rb") as fh:
        return parse_strokes(fh.read())
