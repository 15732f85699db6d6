"""Activation-based sketch similarity: pooling, cosine matrices, layer
ranking, and rank statistics.

Activation matrices (one per sketch per layer, rows = sequence positions,
columns = hidden dimensions) are ingested from files and never computed
here.  The binary container is:

    bytes 0..15   magic "SKETCHVC-ACTMAT\\0"
    u32           container version (1)
    u32           dtype tag (1=float16, 2=float32, 3=float64)
    i32           layer index
    u64           rows (sequence length)
    u64           cols (hidden dimension)
    u32           sketch-id byte length, then that many UTF-8 bytes
    payload       row-major, little-endian

A CSV fallback (one row per line, comma-separated) covers small matrices.
Whatever the stored dtype, all computation happens in float64.

Statistics: AUC-ROC uses the rank formulation (ties count half), Cohen's d
pools variance with n-1 weighting, and the Mann-Whitney U test uses exact
enumeration of the U distribution when n*m <= 10,000 and the data has no
ties, falling back to the tie-corrected normal approximation with
continuity correction otherwise.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInput,
    LayerMismatch,
    MalformedInput,
    NonFinite,
    SchemaViolation,
    ZeroVariance,
    ZeroVector,
)

MAGIC = b"SKETCHVC-ACTMAT\x00"
CONTAINER_VERSION = 1
_DTYPE_TAGS = {1: np.dtype("<f2"), 2: np.dtype("<f4"), 3: np.dtype("<f8")}
_TAG_FOR_DTYPE = {np.dtype(np.float16): 1, np.dtype(np.float32): 2, np.dtype(np.float64): 3}

MAX_LAYER = 31


@dataclass(frozen=True, eq=False)
class ActivationMatrix:
    sketch_id: str
    layer: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise SchemaViolation("activation matrix must be 2-D with positive shape")
        if not np.all(np.isfinite(data)):
            raise NonFinite("activation matrix holds NaN or Inf")
        if not 0 <= self.layer <= MAX_LAYER:
            raise SchemaViolation(f"layer must be in [0, {MAX_LAYER}]", field="layer")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class PooledVector:
    sketch_id: str
    layer: int
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size < 1 or not np.all(np.isfinite(vec)):
            raise SchemaViolation("pooled vector must be a finite 1-D array")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        n = len(self.ids)
        if values.shape != (n, n):
            raise DimensionMismatch("similarity matrix shape must match id count")
        if not np.allclose(values, values.T, atol=1e-9):
            raise SchemaViolation("similarity matrix must be symmetric")
        if not np.allclose(np.diag(values), 1.0, atol=1e-9):
            raise SchemaViolation("similarity matrix diagonal must be 1")
        if values.min() < -1.0 - 1e-12 or values.max() > 1.0 + 1e-12:
            raise SchemaViolation("similarity values must lie in [-1, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", *self.ids])
            for sketch_id, row in zip(self.ids, self.values):
                writer.writerow([sketch_id, *(repr(float(v)) for v in row)])


# --- container io -----------------------------------------------------------

def save_activation(matrix: ActivationMatrix, path, dtype=np.float64) -> None:
    dtype = np.dtype(dtype)
    if dtype not in _TAG_FOR_DTYPE:
        raise SchemaViolation(f"unsupported dtype {dtype}", field="dtype")
    payload = np.ascontiguousarray(matrix.data.astype(dtype.newbyteorder("<")))
    ident = matrix.sketch_id.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIiQQI", CONTAINER_VERSION, _TAG_FOR_DTYPE[dtype],
                             matrix.layer, matrix.rows, matrix.cols, len(ident)))
        fh.write(ident)
        fh.write(payload.tobytes())


def load_activation(path) -> ActivationMatrix:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 32 or not data.startswith(MAGIC):
        raise MalformedInput("not an activation container")
    offset = len(MAGIC)
    version, tag, layer, rows, cols, id_len = struct.unpack_from("<IIiQQI", data, offset)
    offset += struct.calcsize("<IIiQQI")
    if version != CONTAINER_VERSION:
        raise MalformedInput(f"unsupported container version {version}", field="version")
    if tag not in _DTYPE_TAGS:
        raise MalformedInput(f"unknown dtype tag {tag}", field="dtype")
    sketch_id = data[offset:offset + id_len].decode("utf-8")
    offset += id_len
    dtype = _DTYPE_TAGS[tag]
    expected = rows * cols * dtype.itemsize
    if len(data) - offset != expected:
        raise MalformedInput("payload size does not match declared shape")
    values = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=offset).reshape(rows, cols)
    return ActivationMatrix(sketch_id=sketch_id, layer=layer, data=values.astype(np.float64))


def save_activation_csv(matrix: ActivationMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in matrix.data:
            writer.writerow([repr(float(v)) for v in row])


def load_activation_csv(path, sketch_id: str, layer: int) -> ActivationMatrix:
    rows = []
    with open(path, "r", newline="") as fh:
        for line in csv.reader(fh):
            if line:
                try:
                    rows.append([float(v) for v in line])
                except ValueError as exc:
                    raise MalformedInput(f"bad CSV cell: {exc}") from None
    if not rows:
        raise MalformedInput("CSV activation file is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise MalformedInput("CSV rows have inconsistent lengths")
    return ActivationMatrix(sketch_id=sketch_id, layer=layer, data=np.asarray(rows))


# --- pooling and cosine ------------------------------------------------------

def mean_pool(matrix: ActivationMatrix) -> PooledVector:
    """Average across the sequence dimension: one vector per sketch."""
    return PooledVector(
        sketch_id=matrix.sketch_id,
        layer=matrix.layer,
        vector=matrix.data.mean(axis=0),
    )


def cosine(u: PooledVector | np.ndarray, v: PooledVector | np.ndarray) -> float:
    a = u.vector if isinstance(u, PooledVector) else np.asarray(u, dtype=np.float64)
    b = v.vector if isinstance(v, PooledVector) else np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch("cosine needs equal dimensions")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


def similarity_from_pooled(vectors: list[PooledVector]) -> SimilarityMatrix:
    if len(vectors) < 2:
        raise EmptyInput("similarity matrix needs at least two sketches")
    dim = vectors[0].vector.size
    layer = vectors[0].layer
    for vec in vectors:
        if vec.layer != layer:
            raise LayerMismatch(f"sketch {vec.sketch_id} is from layer {vec.layer}, expected {layer}")
        if vec.vector.size != dim:
            raise DimensionMismatch(f"sketch {vec.sketch_id} has dimension {vec.vector.size}, expected {dim}")
        if float(np.linalg.norm(vec.vector)) == 0.0:
            raise ZeroVector(f"sketch {vec.sketch_id} pools to a zero vector")
    n = len(vectors)
    values = np.eye(n)
    for i in range(n):
        values[i, i] = cosine(vectors[i], vectors[i])
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = cosine(vectors[i], vectors[j])
    return SimilarityMatrix(ids=tuple(v.sketch_id for v in vectors), values=values)


def similarity_matrix(matrices: Iterable[ActivationMatrix]) -> SimilarityMatrix:
    """Pool then pairwise-cosine.  Accepts any iterable; matrices are pooled
    as they stream so only the pooled vectors stay resident."""
    return similarity_from_pooled([mean_pool(m) for m in matrices])


# --- rank statistics -----------------------------------------------------------

def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc_roc(similar: list[float], dissimilar: list[float]) -> float:
    """P(random similar score > random dissimilar score), ties counting 1/2."""
    if not similar or not dissimilar:
        raise EmptyInput("both score lists must be non-empty")
    a = np.asarray(similar, dtype=np.float64)
    b = np.asarray(dissimilar, dtype=np.float64)
    ranks = _midranks(np.concatenate([a, b]))
    r_sim = float(ranks[: a.size].sum())
    u = r_sim - a.size * (a.size + 1) / 2.0
    return u / (a.size * b.size)


def cohens_d(a: list[float], b: list[float]) -> float:
    """(mean(a) - mean(b)) / pooled standard deviation (n-1 weighting)."""
    if len(a) < 2 or len(b) < 2:
        raise EmptyInput("each sample needs at least two values")
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    va = float(xa.var(ddof=1))
    vb = float(xb.var(ddof=1))
    pooled = math.sqrt(((xa.size - 1) * va + (xb.size - 1) * vb) / (xa.size + xb.size - 2))
    if pooled == 0.0:
        raise ZeroVariance("both samples are constant; effect size undefined")
    return (float(xa.mean()) - float(xb.mean())) / pooled


def mean_difference(a: list[float], b: list[float]) -> float:
    if not a or not b:
        raise EmptyInput("both samples must be non-empty")
    return float(np.mean(a)) - float(np.mean(b))


def _exact_u_counts(n: int, m: int) -> np.ndarray:
    """counts[u] = number of rank arrangements of n-vs-m with statistic u.

    Coefficients of the Gaussian binomial [n+m choose n]_q, built by
    multiplying by (1 - q^(m+i)) and dividing by (1 - q^i) for i = 1..n."""
    size = n * m + 1
    poly = np.zeros(size)
    poly[0] = 1.0
    for i in range(1, n + 1):
        k = m + i
        if k < size:
            poly[k:] -= poly[:-k].copy()
        out = poly
        # divide by (1 - q^i): cumulative sum with stride i
        for j in range(i, size):
            out[j] += out[j - i]
        poly = out
    return poly


def mann_whitney_u(a: list[float], b: list[float]) -> tuple[float, float]:
    """Mann-Whitney U (for sample a) and a two-sided p-value.

    Exact enumeration when n*m <= 10,000 and the pooled data is tie-free;
    tie-corrected normal approximation with continuity correction
    otherwise."""
    if not a or not b:
        raise EmptyInput("both samples must be non-empty")
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    n, m = xa.size, xb.size
    pooled = np.concatenate([xa, xb])
    ranks = _midranks(pooled)
    u_a = float(ranks[:n].sum()) - n * (n + 1) / 2.0

    _, tie_counts = np.unique(pooled, return_counts=True)
    has_ties = bool(np.any(tie_counts > 1))

    if n * m <= 10_000 and not has_ties:
        counts = _exact_u_counts(n, m)
        total = counts.sum()
        u_low = min(u_a, n * m - u_a)
        p = 2.0 * counts[: int(u_low) + 1].sum() / total
        return u_a, min(1.0, p)

    total_n = n + m
    mu = n * m / 2.0
    tie_term = float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts))
    sigma_sq = (n * m / 12.0) * ((total_n + 1) - tie_term / (total_n * (total_n - 1)))
    if sigma_sq <= 0.0:
        return u_a, 1.0
    shift = abs(u_a - mu) - 0.5
    if shift <= 0.0:
        return u_a, 1.0
    z = shift / math.sqrt(sigma_sq)
    p = math.erfc(z / math.sqrt(2.0))
    return u_a, min(1.0, p)


# --- layer ranking ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LayerRankReport:
    layers: tuple[int, ...]
    metrics: dict
    normalized: dict

    def to_dict(self) -> dict:
        return {
            "layers": list(self.layers),
            "metrics": {str(k): dict(v) for k, v in self.metrics.items()},
            "normalized": {str(k): dict(v) for k, v in self.normalized.items()},
        }


METRIC_NAMES = ("auc_roc", "cohens_d", "mean_difference")


def layer_rank(per_layer_scores: Mapping[int, tuple[list[float], list[float]]]) -> LayerRankReport:
    """Score every layer on how well it separates ground-truth similar from
    dissimilar pairs; each metric is min-max normalized to [0, 1] (a
    degenerate min==max column normalizes to 1)."""
    if not per_layer_scores:
        raise EmptyInput("no layers to rank")
    layers = tuple(sorted(per_layer_scores))
    metrics = {}
    for layer in layers:
        similar, dissimilar = per_layer_scores[layer]
        metrics[layer] = {
            "auc_roc": auc_roc(similar, dissimilar),
            "cohens_d": cohens_d(similar, dissimilar),
            "mean_difference": mean_difference(similar, dissimilar),
        }
    normalized = {layer: {} for layer in layers}
    for name in METRIC_NAMES:
        column = [metrics[layer][name] for layer in layers]
        lo, hi = min(column), max(column)
        for layer, value in zip(layers, column):
            normalized[layer][name] = 1.0 if hi == lo else (value - lo) / (hi - lo)
    return LayerRankReport(layers=layers, metrics=metrics, normalized=normalized)
