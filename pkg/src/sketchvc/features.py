"""Handcrafted per-stroke feature extraction (158 features) and scaling.

The registry is fixed and ordered:

* 15 derived per-point channels x 9 statistics = 135
  channels: x, y, pressure, thickness, dx, dy, direction_angle,
  turning_angle, curvature, speed, acceleration, dpressure, dthickness,
  radial_distance, abs_turning_rate
  statistics: mean, std, variance, min, max, range, rms, skewness,
  kurtosis (population moments; kurtosis is excess, normal -> 0)
* 8 geometric: arc_length, bbox_width, bbox_height, bbox_diagonal,
  bbox_area, aspect_ratio, endpoint_distance, straightness_ratio
* 5 direction: total_abs_angle_change, n_direction_changes_gt30,
  mean_abs_curvature, max_abs_curvature, curvature_sign_changes
* 7 temporal/global: n_points, duration_s, mean_sampling_interval,
  peak_speed_position_ratio, pause_count, grayscale_value, opacity
* 3 density: points_per_bbox_area, arclen_over_diag, ink_density

Conventions for degenerate inputs: statistics of empty derivative
channels, skewness/kurtosis of zero-variance channels, and ratios with a
zero denominator are all imputed with zeros.  Curvature at interior point
i is the turning angle divided by the mean of the two adjacent segment
lengths; endpoints carry no curvature.  A direction change is an interior
turning angle of magnitude > 30 degrees.  Pauses are runs of samples
slower than 5% of the stroke's peak speed.

Kinematic channels use real timing (``t_offsets_ms``) when present and a
uniform ``sampling_rate_hz`` otherwise; geometry is timing-independent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, SchemaViolation
from .strokes import StrokeRecord

REGISTRY_VERSION = "1"
N_FEATURES = 158

CHANNELS = (
    "x",
    "y",
    "pressure",
    "thickness",
    "dx",
    "dy",
    "direction_angle",
    "turning_angle",
    "curvature",
    "speed",
    "acceleration",
    "dpressure",
    "dthickness",
    "radial_distance",
    "abs_turning_rate",
)
CHANNEL_STATS = ("mean", "std", "variance", "min", "max", "range", "rms", "skewness", "kurtosis")
GEOMETRY_FEATURES = (
    "arc_length",
    "bbox_width",
    "bbox_height",
    "bbox_diagonal",
    "bbox_area",
    "aspect_ratio",
    "endpoint_distance",
    "straightness_ratio",
)
DIRECTION_FEATURES = (
    "total_abs_angle_change",
    "n_direction_changes_gt30",
    "mean_abs_curvature",
    "max_abs_curvature",
    "curvature_sign_changes",
)
TEMPORAL_FEATURES = (
    "n_points",
    "duration_s",
    "mean_sampling_interval",
    "peak_speed_position_ratio",
    "pause_count",
    "grayscale_value",
    "opacity",
)
DENSITY_FEATURES = ("points_per_bbox_area", "arclen_over_diag", "ink_density")

DIRECTION_CHANGE_THRESHOLD = math.radians(30.0)
PAUSE_SPEED_FRACTION = 0.05

_REGISTRY: tuple[str, ...] = tuple(
    [f"{ch}_{stat}" for ch in CHANNELS for stat in CHANNEL_STATS]
    + list(GEOMETRY_FEATURES)
    + list(DIRECTION_FEATURES)
    + list(TEMPORAL_FEATURES)
    + list(DENSITY_FEATURES)
)
assert len(_REGISTRY) == N_FEATURES


def feature_registry() -> tuple[str, ...]:
    """Stable ordered names of all 158 features."""
    return _REGISTRY


def feature_index(name: str) -> int:
    return _REGISTRY.index(name)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Ordered 158-vector; order matches feature_registry()."""

    values: np.ndarray
    registry_version: str = REGISTRY_VERSION

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (N_FEATURES,):
            raise DimensionMismatch(f"feature vector must have {N_FEATURES} entries, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise SchemaViolation("feature vector holds non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __getitem__(self, name: str) -> float:
        return float(self.values[feature_index(name)])


@dataclass(frozen=True, eq=False)
class ScalerParams:
    """Per-dimension population mean / population std."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        stds = np.asarray(self.stds, dtype=np.float64)
        if means.shape != (N_FEATURES,) or stds.shape != (N_FEATURES,):
            raise DimensionMismatch("scaler parameters must be 158-dimensional")
        if np.any(stds < 0):
            raise SchemaViolation("scaler stds must be non-negative")
        means.setflags(write=False)
        stds.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)


@dataclass(frozen=True, eq=False)
class ChannelSeries:
    """The 15 derived per-point series plus the shared timing/segment data."""

    t: np.ndarray
    seg_lengths: np.ndarray
    channels: dict

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]


def _wrap_angle(d: np.ndarray) -> np.ndarray:
    """Wrap to (-pi, pi]."""
    out = (d + math.pi) % (2.0 * math.pi) - math.pi
    out[out == -math.pi] = math.pi
    return out


def derive_channels(record: StrokeRecord, sampling_rate_hz: float = 60.0) -> ChannelSeries:
    if sampling_rate_hz <= 0:
        raise SchemaViolation("sampling_rate_hz must be positive", field="sampling_rate_hz")
    n = record.n_points
    x = np.asarray(record.x_coordinates, dtype=np.float64)
    y = np.asarray(record.y_coordinates, dtype=np.float64)
    pressure = np.asarray(record.pressure_values, dtype=np.float64)
    thickness = np.asarray(record.thickness_values, dtype=np.float64)

    if record.t_offsets_ms is not None:
        t = np.asarray(record.t_offsets_ms, dtype=np.float64) / 1000.0
    else:
        t = np.arange(n, dtype=np.float64) / sampling_rate_hz

    dx = np.diff(x)
    dy = np.diff(y)
    seg = np.hypot(dx, dy)
    dt = np.diff(t)

    # zero-length segments carry the previous direction (first defaults to 0)
    direction = np.zeros(max(n - 1, 0), dtype=np.float64)
    prev = 0.0
    for i in range(n - 1):
        if seg[i] > 0.0:
            prev = math.atan2(dy[i], dx[i])
        direction[i] = prev

    if n >= 3:
        turning = _wrap_angle(np.diff(direction))
        adj = 0.5 * (seg[:-1] + seg[1:])
        curvature = np.where(adj > 0.0, turning / np.where(adj > 0.0, adj, 1.0), 0.0)
        adj_dt = 0.5 * (dt[:-1] + dt[1:])
        abs_turn_rate = np.where(adj_dt > 0.0, np.abs(turning) / np.where(adj_dt > 0.0, adj_dt, 1.0), 0.0)
    else:
        turning = np.zeros(0)
        curvature = np.zeros(0)
        abs_turn_rate = np.zeros(0)

    speed = np.where(dt > 0.0, seg / np.where(dt > 0.0, dt, 1.0), 0.0)
    if n >= 3:
        adj_dt = 0.5 * (dt[:-1] + dt[1:])
        accel = np.where(adj_dt > 0.0, np.diff(speed) / np.where(adj_dt > 0.0, adj_dt, 1.0), 0.0)
    else:
        accel = np.zeros(0)

    cx = 0.5 * (x.min() + x.max())
    cy = 0.5 * (y.min() + y.max())
    radial = np.hypot(x - cx, y - cy)

    channels = {
        "x": x,
        "y": y,
        "pressure": pressure,
        "thickness": thickness,
        "dx": dx,
        "dy": dy,
        "direction_angle": direction,
        "turning_angle": turning,
        "curvature": curvature,
        "speed": speed,
        "acceleration": accel,
        "dpressure": np.diff(pressure),
        "dthickness": np.diff(thickness),
        "radial_distance": radial,
        "abs_turning_rate": abs_turn_rate,
    }
    return ChannelSeries(t=t, seg_lengths=seg, channels=channels)


def _stats9(values: np.ndarray) -> list[float]:
    if values.size == 0:
        return [0.0] * 9
    mean = float(values.mean())
    var = float(((values - mean) ** 2).mean())
    std = math.sqrt(var)
    vmin = float(values.min())
    vmax = float(values.max())
    rms = math.sqrt(float((values**2).mean()))
    if std > 0.0:
        skew = float(((values - mean) ** 3).mean()) / std**3
        kurt = float(((values - mean) ** 4).mean()) / std**4 - 3.0
    else:
        skew = 0.0
        kurt = 0.0
    return [mean, std, var, vmin, vmax, vmax - vmin, rms, skew, kurt]


def extract_features(record: StrokeRecord, sampling_rate_hz: float = 60.0) -> FeatureVector:
    """Compute the full ordered 158-feature vector for one stroke."""
    series = derive_channels(record, sampling_rate_hz)
    x = series["x"]
    y = series["y"]
    seg = series.seg_lengths
    t = series.t
    n = record.n_points

    out: list[float] = []
    for ch in CHANNELS:
        out.extend(_stats9(series[ch]))

    arc_length = float(seg.sum())
    width = float(x.max() - x.min())
    height = float(y.max() - y.min())
    diagonal = math.hypot(width, height)
    area = width * height
    aspect = min(width, height) / max(width, height) if max(width, height) > 0 else 0.0
    endpoint = math.hypot(float(x[-1] - x[0]), float(y[-1] - y[0]))
    straightness = endpoint / arc_length if arc_length > 0 else 0.0
    out.extend([arc_length, width, height, diagonal, area, aspect, endpoint, straightness])

    turning = series["turning_angle"]
    curvature = series["curvature"]
    total_abs_angle = float(np.abs(turning).sum()) if turning.size else 0.0
    n_changes = int(np.count_nonzero(np.abs(turning) > DIRECTION_CHANGE_THRESHOLD)) if turning.size else 0
    mean_abs_k = float(np.abs(curvature).mean()) if curvature.size else 0.0
    max_abs_k = float(np.abs(curvature).max()) if curvature.size else 0.0
    signs = np.sign(curvature[curvature != 0.0]) if curvature.size else np.zeros(0)
    sign_changes = int(np.count_nonzero(np.diff(signs))) if signs.size >= 2 else 0
    out.extend([total_abs_angle, float(n_changes), mean_abs_k, max_abs_k, float(sign_changes)])

    duration = float(t[-1] - t[0]) if n >= 2 else 0.0
    mean_dt = duration / (n - 1) if n >= 2 else 0.0
    speed = series["speed"]
    if speed.size >= 2:
        peak_pos = float(np.argmax(speed)) / (speed.size - 1)
    else:
        peak_pos = 0.0
    pause_count = 0
    if speed.size and float(speed.max()) > 0.0:
        slow = speed < PAUSE_SPEED_FRACTION * float(speed.max())
        pause_count = int(np.count_nonzero(slow[1:] & ~slow[:-1])) + int(slow[0])
    out.extend([float(n), duration, mean_dt, peak_pos, float(pause_count),
                record.grayscale_value, record.opacity])

    points_per_area = n / area if area > 0 else 0.0
    arclen_over_diag = arc_length / diagonal if diagonal > 0 else 0.0
    mean_thickness = float(series["thickness"].mean())
    ink_density = arc_length * mean_thickness / area if area > 0 else 0.0
    out.extend([points_per_area, arclen_over_diag, ink_density])

    return FeatureVector(values=np.asarray(out, dtype=np.float64))


def fit_scaler(vectors: list[FeatureVector]) -> ScalerParams:
    """Population mean and population std per dimension."""
    if not vectors:
        raise EmptyInput("cannot fit a scaler on an empty list")
    matrix = np.stack([v.values for v in vectors])
    return ScalerParams(means=matrix.mean(axis=0), stds=matrix.std(axis=0))


def apply_scaler(vector: FeatureVector, params: ScalerParams) -> FeatureVector:
    """(v - mean) / std per dimension; zero-variance dimensions map to 0."""
    if vector.values.shape != params.means.shape:
        raise DimensionMismatch("vector and scaler dimensions differ")
    scaled = np.where(params.stds > 0, (vector.values - params.means) / np.where(params.stds > 0, params.stds, 1.0), 0.0)
    return FeatureVector(values=scaled, registry_version=vector.registry_version)


def scale_matrix(matrix: np.ndarray, params: ScalerParams) -> np.ndarray:
    stds = np.where(params.stds > 0, params.stds, 1.0)
    scaled = (matrix - params.means) / stds
    return np.where(params.stds > 0, scaled, 0.0)


def feature_matrix(records, sampling_rate_hz: float = 60.0) -> np.ndarray:
    return np.stack([extract_features(r, sampling_rate_hz).values for r in records])


def export_feature_matrix(path, labeled_records, sampling_rate_hz: float = 60.0) -> None:
    """CSV export: content_id,label,<158 registry columns>."""
    from .strokes import stroke_content_id

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["content_id", "label", *feature_registry()])
        for record, label in labeled_records:
            vec = extract_features(record, sampling_rate_hz)
            writer.writerow([stroke_content_id(record), label, *(repr(float(v)) for v in vec.values)])
