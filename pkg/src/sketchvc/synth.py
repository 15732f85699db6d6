"""Seeded synthetic stroke and session generators, plus vector-domain
augmentation.

Each of the four training classes gets a distinct kinematic signature:

* constraining - near-perfect straight lines (straightness > 0.98, at most
  one significant direction change), light tone, fast
* defining      - smooth single-bend curves with clear curvature, light
  tone, fast
* detailing     - similar curve geometry but dark tone (grayscale >= 0.7)
  and slow by construction (its speed range sits below defining's)
* hatches       - zigzag runs with at least six near-reversals (interior
  turning angles beyond 150 degrees); stored with category "shading"

Everything is a pure function of the seed: the same spec always produces
byte-identical records.  Coordinate noise is additive Gaussian jitter,
clipped to the canvas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .sessions import CommitMarker, ConceptSwitch, SessionLog, StrokeAdded
from .strokes import (
    TRAINING_CLASSES,
    BrushParams,
    StrokeCategory,
    StrokeRecord,
    stroke_content_bytes,
    stroke_content_id,
)

_EPOCH = datetime(2025, 3, 1, 9, 0, 0)

# Minimum points needed to articulate >= 6 sharp reversals.
_HATCH_MIN_POINTS = 20

# Six-class category stored on generated records, per training class.
_STORED_CATEGORY = {
    "constraining": StrokeCategory.CONSTRAINING,
    "defining": StrokeCategory.DEFINING,
    "detailing": StrokeCategory.DETAILING,
    "hatches": StrokeCategory.SHADING,
}


@dataclass(frozen=True)
class StrokeGenSpec:
    category: str
    seed: int
    canvas: tuple[int, int] = (1280, 720)
    noise_level: float = 1.0
    point_count_range: tuple[int, int] = (36, 72)

    def validate(self) -> None:
        if self.category not in TRAINING_CLASSES:
            raise InvalidSpec(f"category must be one of {TRAINING_CLASSES}", field="category")
        if self.canvas[0] <= 0 or self.canvas[1] <= 0:
            raise InvalidSpec("canvas dimensions must be positive", field="canvas")
        if not math.isfinite(self.noise_level) or self.noise_level < 0:
            raise InvalidSpec("noise_level must be a finite non-negative real", field="noise_level")
        lo, hi = self.point_count_range
        if lo < 4 or hi < lo:
            raise InvalidSpec("point_count_range must satisfy 4 <= min <= max", field="point_count_range")
        if self.category == "hatches" and hi < _HATCH_MIN_POINTS:
            raise InvalidSpec(
                f"hatches need point_count_range max >= {_HATCH_MIN_POINTS}", field="point_count_range"
            )


@dataclass(frozen=True)
class AugmentTransform:
    """One affine transform about the stroke's bounding-box center."""

    kind: str
    angle_deg: float = 0.0
    dx: float = 0.0
    dy: float = 0.0
    factor: float = 1.0

    def __post_init__(self):
        if self.kind not in ("rotate", "flip_h", "flip_v", "translate", "scale"):
            raise InvalidSpec(f"unknown transform kind {self.kind!r}", field="kind")
        for name in ("angle_deg", "dx", "dy", "factor"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidSpec(f"{name} must be finite", field=name)
        if self.kind == "scale" and self.factor <= 0:
            raise InvalidSpec("scale factor must be positive", field="factor")

    @classmethod
    def rotate(cls, angle_deg: float) -> "AugmentTransform":
        return cls(kind="rotate", angle_deg=angle_deg)

    @classmethod
    def flip_h(cls) -> "AugmentTransform":
        return cls(kind="flip_h")

    @classmethod
    def flip_v(cls) -> "AugmentTransform":
        return cls(kind="flip_v")

    @classmethod
    def translate(cls, dx: float, dy: float) -> "AugmentTransform":
        return cls(kind="translate", dx=dx, dy=dy)

    @classmethod
    def scale(cls, factor: float) -> "AugmentTransform":
        return cls(kind="scale", factor=factor)


def _pick_span(rng, canvas, frac_lo, frac_hi):
    """Start point and angle such that the far end stays inside the canvas."""
    w, h = canvas
    diag = math.hypot(w, h)
    length = rng.uniform(frac_lo, frac_hi) * diag
    for _ in range(64):
        x0 = rng.uniform(0.08 * w, 0.92 * w)
        y0 = rng.uniform(0.08 * h, 0.92 * h)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        x1 = x0 + length * math.cos(angle)
        y1 = y0 + length * math.sin(angle)
        if 0 <= x1 <= w and 0 <= y1 <= h:
            return x0, y0, angle, length
        length *= 0.9
    return w * 0.1, h * 0.5, 0.0, w * 0.8


def _line_points(rng, spec, n):
    x0, y0, angle, length = _pick_span(rng, spec.canvas, 0.35, 0.60)
    s = np.linspace(0.0, 1.0, n)
    xs = x0 + s * length * math.cos(angle)
    ys = y0 + s * length * math.sin(angle)
    seg = length / (n - 1)
    sigma = min(0.35 * spec.noise_level, 0.02 * seg)
    xs = xs + rng.normal(0.0, sigma, n)
    ys = ys + rng.normal(0.0, sigma, n)
    return xs, ys


def _bezier_points(rng, spec, n, frac_lo, frac_hi, sigma_scale):
    x0, y0, angle, length = _pick_span(rng, spec.canvas, frac_lo, frac_hi)
    x2 = x0 + length * math.cos(angle)
    y2 = y0 + length * math.sin(angle)
    bulge = rng.uniform(0.12, 0.30) * length * rng.choice([-1.0, 1.0])
    mx, my = 0.5 * (x0 + x2), 0.5 * (y0 + y2)
    cx = mx - bulge * math.sin(angle)
    cy = my + bulge * math.cos(angle)
    s = np.linspace(0.0, 1.0, n)
    xs = (1 - s) ** 2 * x0 + 2 * (1 - s) * s * cx + s**2 * x2
    ys = (1 - s) ** 2 * y0 + 2 * (1 - s) * s * cy + s**2 * y2
    sigma = sigma_scale * spec.noise_level
    xs = xs + rng.normal(0.0, sigma, n)
    ys = ys + rng.normal(0.0, sigma, n)
    return xs, ys


def _hatch_points(rng, spec, n):
    w, h = spec.canvas
    legs = max(8, min(14, n // 5))
    leg_len = rng.uniform(50.0, 100.0)
    advance = rng.uniform(3.0, 7.0)
    vertical = rng.random() < 0.5  # up-and-down vs left-to-right hand movement
    span = legs * advance + leg_len
    x0 = rng.uniform(0.05 * w, max(0.05 * w + 1.0, 0.9 * w - span))
    y0 = rng.uniform(0.05 * h, max(0.05 * h + 1.0, 0.9 * h - span))

    base = n // legs
    counts = [base] * legs
    for i in range(n - base * legs):
        counts[i] += 1

    # each leg runs apex-to-apex; the shared apex belongs to the next leg's
    # start so reversals are single sharp vertices
    us, alongs = [], []
    for k, count in enumerate(counts):
        a0 = 0.0 if k % 2 == 0 else leg_len
        a1 = leg_len - a0
        closed = k == legs - 1
        denom = (count - 1) if closed else count
        for j in range(count):
            frac = j / max(denom, 1)
            us.append((k + frac) * advance)
            alongs.append(a0 + frac * (a1 - a0))
    us = np.asarray(us)
    alongs = np.asarray(alongs)
    if vertical:
        xs, ys = x0 + us, y0 + alongs
    else:
        xs, ys = x0 + alongs, y0 + us
    xs = xs + rng.normal(0.0, 0.15 * spec.noise_level, len(xs))
    ys = ys + rng.normal(0.0, 0.15 * spec.noise_level, len(ys))
    return xs, ys


# per-class tone / kinematics ranges (grayscale, speed px/s, pressure, thickness)
_CLASS_PROFILE = {
    "constraining": ((0.15, 0.45), (900.0, 1500.0), (0.15, 0.35), (1.0, 2.5)),
    "defining": ((0.15, 0.45), (750.0, 1300.0), (0.20, 0.45), (1.0, 3.0)),
    "detailing": ((0.72, 0.92), (120.0, 280.0), (0.50, 0.85), (2.0, 5.0)),
    "hatches": ((0.35, 0.75), (500.0, 1000.0), (0.30, 0.60), (1.0, 3.0)),
}


def gen_stroke(spec: StrokeGenSpec, stroke_number: int = 1) -> StrokeRecord:
    """Deterministically generate one stroke expressing its class signature."""
    spec.validate()
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    lo, hi = spec.point_count_range
    if spec.category == "hatches":
        lo = max(lo, _HATCH_MIN_POINTS)
    n = int(rng.integers(lo, hi + 1))

    if spec.category == "constraining":
        xs, ys = _line_points(rng, spec, n)
    elif spec.category == "defining":
        xs, ys = _bezier_points(rng, spec, n, 0.30, 0.55, 0.5)
    elif spec.category == "detailing":
        xs, ys = _bezier_points(rng, spec, n, 0.15, 0.35, 0.3)
    else:
        xs, ys = _hatch_points(rng, spec, n)

    w, h = spec.canvas
    xs = np.clip(xs, 0.0, float(w))
    ys = np.clip(ys, 0.0, float(h))

    gray_rng, speed_rng, pressure_rng, thickness_rng = _CLASS_PROFILE[spec.category]
    grayscale = rng.uniform(*gray_rng)
    base_speed = rng.uniform(*speed_rng)
    base_pressure = rng.uniform(*pressure_rng)
    base_thickness = rng.uniform(*thickness_rng)

    seg = np.hypot(np.diff(xs), np.diff(ys))
    phase = rng.uniform(0.0, 2.0 * math.pi)
    wobble = 1.0 + 0.08 * np.sin(phase + np.linspace(0.0, 2.0 * math.pi, max(len(seg), 1)))
    speeds = base_speed * wobble
    dt = np.where(speeds > 0, seg / speeds, 0.0)
    t_offsets = np.concatenate([[0.0], np.cumsum(dt)]) * 1000.0

    pressure = np.clip(base_pressure + rng.normal(0.0, 0.02, len(xs)), 0.0, 1.0)
    thickness = np.clip(base_thickness + rng.normal(0.0, 0.08, len(xs)), 0.5, 20.0)

    tone = max(0, min(255, round(255 * (1.0 - grayscale))))
    timestamp = _EPOCH + timedelta(
        seconds=int(rng.integers(0, 60 * 60 * 24 * 90)), microseconds=int(rng.integers(0, 1_000_000))
    )
    return StrokeRecord(
        id=rng.bytes(12).hex(),
        username="synthetic",
        category=_STORED_CATEGORY[spec.category],
        stroke_number=stroke_number,
        timestamp=timestamp,
        x_coordinates=tuple(float(v) for v in xs),
        y_coordinates=tuple(float(v) for v in ys),
        pressure_values=tuple(float(v) for v in pressure),
        thickness_values=tuple(float(v) for v in thickness),
        t_offsets_ms=tuple(float(v) for v in t_offsets),
        color=f"#{tone:02x}{tone:02x}{tone:02x}",
        grayscale_value=float(grayscale),
        opacity=float(rng.uniform(0.75, 1.0)),
        stroke_parameters=BrushParams(
            size=float(round(base_thickness, 2)),
            thinning=0.0,
            smoothing=float(round(rng.uniform(0.3, 0.7), 3)),
            streamline=float(round(rng.uniform(0.3, 0.7), 3)),
            simulate_pressure=False,
        ),
    )


def _child_seed(seed: int, *key: int) -> int:
    state = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *key]).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def gen_dataset(n_per_class: int, seed: int, **spec_overrides) -> list[tuple[StrokeRecord, str]]:
    """Class-balanced labeled strokes: n_per_class records per training class."""
    if n_per_class < 1:
        raise InvalidSpec("n_per_class must be >= 1", field="n_per_class")
    out = []
    for ci, label in enumerate(TRAINING_CLASSES):
        for i in range(n_per_class):
            spec = StrokeGenSpec(category=label, seed=_child_seed(seed, ci, i), **spec_overrides)
            out.append((gen_stroke(spec, stroke_number=i + 1), label))
    return out


def write_dataset(directory, labeled: list[tuple[StrokeRecord, str]]) -> Path:
    """Dump strokes as one JSON file each plus a labels index (id<TAB>label)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for record, label in labeled:
        cid = stroke_content_id(record)
        (directory / f"{cid}.json").write_bytes(stroke_content_bytes(record))
        lines.append(f"{cid}\t{label}\n")
    index = directory / "labels.tsv"
    index.write_text("".join(lines), encoding="utf-8")
    return index


def read_dataset(directory) -> list[tuple[StrokeRecord, str]]:
    """Load a dataset dump written by write_dataset (labels.tsv + one JSON
    file per stroke, named by content id)."""
    from .errors import MalformedInput
    from .strokes import record_from_content_bytes

    directory = Path(directory)
    index = directory / "labels.tsv"
    if not index.is_file():
        raise MalformedInput(f"{directory} has no labels.tsv index")
    out = []
    for line in index.read_text("utf-8").splitlines():
        if not line.strip():
            continue
        try:
            cid, label = line.split("\t")
        except ValueError:
            raise MalformedInput(f"bad labels.tsv line: {line!r}") from None
        out.append((record_from_content_bytes(cid, (directory / f"{cid}.json").read_bytes()), label))
    return out


def augment_stroke(record: StrokeRecord, transform: AugmentTransform) -> StrokeRecord:
    """Apply one affine transform about the bounding-box center.

    Coordinates change; pressure, thickness, timing, and category do not.
    """
    xs = np.asarray(record.x_coordinates)
    ys = np.asarray(record.y_coordinates)
    cx = 0.5 * (xs.min() + xs.max())
    cy = 0.5 * (ys.min() + ys.max())

    if transform.kind == "rotate":
        a = math.radians(transform.angle_deg)
        ca, sa = math.cos(a), math.sin(a)
        rx = cx + ca * (xs - cx) - sa * (ys - cy)
        ry = cy + sa * (xs - cx) + ca * (ys - cy)
    elif transform.kind == "flip_h":
        rx, ry = 2.0 * cx - xs, ys
    elif transform.kind == "flip_v":
        rx, ry = xs, 2.0 * cy - ys
    elif transform.kind == "translate":
        rx, ry = xs + transform.dx, ys + transform.dy
    else:  # scale
        rx = cx + transform.factor * (xs - cx)
        ry = cy + transform.factor * (ys - cy)

    return replace(
        record,
        x_coordinates=tuple(float(v) for v in rx),
        y_coordinates=tuple(float(v) for v in ry),
    )


def gen_session(pyramid_shape, seed: int, author: str = "synthetic") -> SessionLog:
    """A session whose replay yields one branch per entry of the shape,
    holding exactly that many commits."""
    shape = list(pyramid_shape)
    if not shape or any((not isinstance(hgt, int)) or hgt < 1 for hgt in shape):
        raise InvalidSpec("pyramid shape must be a non-empty list of heights >= 1", field="pyramid_shape")
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0x5E55]))
    cursor = _EPOCH
    events = []
    stroke_no = 1
    for concept, height in enumerate(shape):
        cursor += timedelta(seconds=float(rng.uniform(2.0, 8.0)))
        events.append(ConceptSwitch(concept_id=concept, timestamp=cursor))
        for step in range(height):
            for _ in range(int(rng.integers(1, 4))):
                cursor += timedelta(seconds=float(rng.uniform(1.0, 6.0)))
                spec = StrokeGenSpec(
                    category=TRAINING_CLASSES[int(rng.integers(0, 4))],
                    seed=_child_seed(seed, concept, step, stroke_no),
                )
                record = replace(gen_stroke(spec, stroke_number=stroke_no), timestamp=cursor)
                events.append(StrokeAdded(record=record, concept_id=concept))
                stroke_no += 1
            cursor += timedelta(seconds=float(rng.uniform(1.0, 5.0)))
            events.append(CommitMarker(message=f"concept {concept + 1} step {step + 1}", timestamp=cursor))
    return SessionLog(author=author, started_at=_EPOCH, events=tuple(events))


# Canned pyramid shapes used by the process-metric fixtures: a manual
# baseline of five one-shot concepts, and a tracked session with 13
# branches / 45 commits (heights include the observed 5-5-8 deep chains).
MANUAL_BASELINE_SHAPE = (1, 1, 1, 1, 1)
TRACKED_SESSION_SHAPE = (5, 3, 5, 2, 4, 3, 2, 8, 3, 4, 2, 2, 2)
