"""Dense matrix primitives and the shape/feature containers used everywhere.

Matrices are plain ``numpy`` arrays of dtype float32 in C (row-major) order.
Reductions run in float64 and are rounded back to float32 on the way out.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from memread.errors import DimensionError

DTYPE = np.float32
ACC_DTYPE = np.float64

MAX_CELLS = 2**20


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Coerce ``data`` to a contiguous 2-D float32 array."""
    arr = np.ascontiguousarray(data, dtype=DTYPE)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} has a zero dimension: {arr.shape}")
    return arr


def new_matrix(rows: int, cols: int, fill: float = 0.0) -> np.ndarray:
    if rows <= 0 or cols <= 0:
        raise DimensionError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return np.full((rows, cols), fill, dtype=DTYPE)


def transpose_multiply(a, b) -> np.ndarray:
    """Return ``a.T @ b`` for column-feature matrices.

    ``a`` is C x M and ``b`` is C x N; the result is M x N with
    ``out[i, j] = sum_c a[c, i] * b[c, j]`` accumulated in float64.
    """
    return _transpose_multiply64(as_matrix(a, "a"), as_matrix(b, "b")).astype(DTYPE)


def _transpose_multiply64(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] != b.shape[0]:
        raise DimensionError(
            f"channel mismatch: a has {a.shape[0]} rows, b has {b.shape[0]}"
        )
    return a.astype(ACC_DTYPE).T @ b.astype(ACC_DTYPE)


@dataclass(frozen=True)
class ShapeSpec:
    """Feature-map geometry of one memory read.

    ``height``/``width`` are in stride-16 cells; ``frames_in_memory`` is T.
    """

    key_dim: int = 64
    value_dim: int = 512
    frames_in_memory: int = 10
    height: int = 30
    width: int = 54

    def __post_init__(self):
        for name in ("key_dim", "value_dim", "frames_in_memory", "height", "width"):
            value = getattr(self, name)
            if int(value) != value or value <= 0:
                raise DimensionError(f"{name} must be a positive integer, got {value}")
        if self.height * self.width > MAX_CELLS:
            raise DimensionError(
                f"H*W = {self.height * self.width} exceeds the {MAX_CELLS} cell guard"
            )

    @property
    def query_nodes(self) -> int:
        return self.height * self.width

    @property
    def memory_nodes(self) -> int:
        return self.frames_in_memory * self.height * self.width


@dataclass(frozen=True, eq=False)
class _FeatureSet:
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_matrix(self.matrix, type(self).__name__))

    @property
    def channels(self) -> int:
        return self.matrix.shape[0]

    @property
    def count(self) -> int:
        return self.matrix.shape[1]


class KeySet(_FeatureSet):
    """C^k x N key features, one column per spatial position."""


class ValueSet(_FeatureSet):
    """C^v x N value features of a single object."""


def concat_columns(sets):
    """Concatenate feature sets of one kind along the node axis, in order."""
    sets = list(sets)
    if not sets:
        raise DimensionError("nothing to concatenate")
    kind = type(sets[0])
    channels = {s.channels for s in sets}
    if len(channels) != 1:
        raise DimensionError(f"channel counts differ: {sorted(channels)}")
    return kind(np.concatenate([s.matrix for s in sets], axis=1))
