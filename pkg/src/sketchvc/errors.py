"""Exception types shared across the toolkit.

Every domain error derives from SketchError so callers (CLI, service) can
map "domain failure" vs "bug" uniformly.  Errors that point at a specific
input field carry it in ``field``.
"""

from __future__ import annotations


class SketchError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class MalformedInput(SketchError):
    code = "malformed_input"


class SchemaViolation(SketchError):
    code = "schema_violation"


class InvalidSpec(SketchError):
    code = "invalid_spec"


class EmptyInput(SketchError):
    code = "empty_input"


class DimensionMismatch(SketchError):
    code = "dimension_mismatch"


class ClassTooSmall(SketchError):
    code = "class_too_small"


class InvalidHyperparams(SketchError):
    code = "invalid_hyperparams"


class AlreadyExists(SketchError):
    code = "already_exists"


class IoFailure(SketchError):
    code = "io_failure"


class UnknownCommit(SketchError):
    code = "unknown_commit"


class UnknownBaseCommit(SketchError):
    code = "unknown_base_commit"


class StashEmpty(SketchError):
    code = "stash_empty"


class EmptyRepo(SketchError):
    code = "empty_repo"


class LayerMismatch(SketchError):
    code = "layer_mismatch"


class ZeroVector(SketchError):
    code = "zero_vector"


class ZeroVariance(SketchError):
    code = "zero_variance"


class NonFinite(SketchError):
    code = "non_finite"


class BindFailure(SketchError):
    code = "bind_failure"


class CorruptDataRoot(SketchError):
    code = "corrupt_data_root"
