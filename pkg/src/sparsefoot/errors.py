"""Exception types raised across the package."""


class SparseFootError(Exception):
    """Base class for all package errors."""


class ValidationError(SparseFootError, ValueError):
    """Input violates a precondition (non-finite values, bad ranges)."""


class ConfigError(ValidationError):
    """Invalid configuration: unknown family, difficulty out of range, bad intrinsics."""


class ShapeMismatchError(ValidationError):
    """Arrays that must share a shape do not."""


class OutOfBoundsError(SparseFootError, IndexError):
    """A query position falls outside the terrain patch."""


class InvalidOperationError(SparseFootError):
    """Operation applied to an object it does not support."""


class TerrainMismatchError(ValidationError):
    """Episode logs and an edge-distance field describe different terrains."""
