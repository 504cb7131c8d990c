"""Pairwise similarity between memory keys and query keys.

Three measures: dot product, cosine, and L2 (negative squared Euclidean
distance). L2 comes in two flavours: the literal elementwise form and the
decomposed form ``2 a.b - |a|^2 [- |b|^2]`` which needs one matrix product
plus a vector of memory norms.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from memread.core import ACC_DTYPE, DTYPE, KeySet, _transpose_multiply64
from memread.errors import DegenerateInputError, DimensionError, StateError

NORM_EPS = 1e-12
# Bound on the C x M x chunk difference tensor in the literal L2 path.
_NAIVE_CHUNK_ELEMS = 1 << 22


class SimilarityMeasure(enum.Enum):
    DOT = "dot"
    COSINE = "cos"
    L2_NAIVE = "l2"
    L2_DECOMPOSED = "l2fast"

    @property
    def is_l2(self) -> bool:
        return self in (SimilarityMeasure.L2_NAIVE, SimilarityMeasure.L2_DECOMPOSED)

    @classmethod
    def parse(cls, name: str) -> "SimilarityMeasure":
        aliases = {"cosine": "cos", "l2naive": "l2", "l2decomposed": "l2fast"}
        key = name.strip().lower().replace("_", "").replace("-", "")
        return cls(aliases.get(key, key))


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Raw similarities, memory nodes along rows and query nodes along columns."""

    matrix: np.ndarray
    measure: SimilarityMeasure
    scaled: bool = False
    query_norm_dropped: bool = False
    topk: Optional[int] = None

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]


def _check_channels(km: KeySet, kq: KeySet):
    if km.channels != kq.channels:
        raise DimensionError(
            f"key channel mismatch: memory has {km.channels}, query has {kq.channels}"
        )


# float64 kernels. Columns are feature vectors, shapes (C, M) and (C, N).

def _dot64(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _transpose_multiply64(a, b)


def _normalize_columns64(x: np.ndarray, side: str) -> np.ndarray:
    x = x.astype(ACC_DTYPE)
    norms = np.sqrt(np.einsum("cn,cn->n", x, x))
    bad = np.flatnonzero(norms <= NORM_EPS)
    if bad.size:
        raise DegenerateInputError(
            f"cosine similarity undefined: {side} column {int(bad[0])} has zero norm"
        )
    return x / norms


def _cosine64(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return _normalize_columns64(a, "memory").T @ _normalize_columns64(b, "query")


def _l2_naive64(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """-||a_i - b_j||^2 by materialising differences, chunked over queries."""
    a = a.astype(ACC_DTYPE)
    b = b.astype(ACC_DTYPE)
    channels, m = a.shape
    n = b.shape[1]
    out = np.empty((m, n), dtype=ACC_DTYPE)
    step = max(1, _NAIVE_CHUNK_ELEMS // max(1, channels * m))
    for start in range(0, n, step):
        stop = min(n, start + step)
        diff = a[:, :, None] - b[:, None, start:stop]
        np.square(diff, out=diff)
        # sum over channels in fixed order so a<->b swaps give identical bits
        out[:, start:stop] = -diff.sum(axis=0)
    return out


def _memory_sq_norms64(a: np.ndarray) -> np.ndarray:
    a = a.astype(ACC_DTYPE)
    return np.einsum("cm,cm->m", a, a)


def _l2_decomposed64(a: np.ndarray, b: np.ndarray, include_query_norm: bool) -> np.ndarray:
    s = _dot64(a, b)
    s *= 2.0
    s -= _memory_sq_norms64(a)[:, None]
    if include_query_norm:
        s -= _memory_sq_norms64(b)[None, :]
    return s


def pairwise_scores(km: KeySet, kq: KeySet, measure: SimilarityMeasure) -> ScoreMatrix:
    """Score every memory key against every query key by the literal definition.

    ``L2_DECOMPOSED`` is routed to :func:`l2_scores_fast` with the query norm
    dropped, which is the production path.
    """
    _check_channels(km, kq)
    if measure is SimilarityMeasure.L2_DECOMPOSED:
        return l2_scores_fast(km, kq, include_query_norm=False)
    kernel = {
        SimilarityMeasure.DOT: _dot64,
        SimilarityMeasure.COSINE: _cosine64,
        SimilarityMeasure.L2_NAIVE: _l2_naive64,
    }[measure]
    return ScoreMatrix(kernel(km.matrix, kq.matrix).astype(DTYPE), measure)


def l2_scores_fast(km: KeySet, kq: KeySet, include_query_norm: bool = False) -> ScoreMatrix:
    """Decomposed L2 similarity: ``2 kM_i . kQ_j - |kM_i|^2 (- |kQ_j|^2)``.

    The query-norm term is constant per column and cancels in a column
    softmax, so it is dropped by default.
    """
    _check_channels(km, kq)
    s = _l2_decomposed64(km.matrix, kq.matrix, include_query_norm)
    return ScoreMatrix(
        s.astype(DTYPE),
        SimilarityMeasure.L2_DECOMPOSED,
        query_norm_dropped=not include_query_norm,
    )


def scale_scores(s: ScoreMatrix, key_dim: int) -> ScoreMatrix:
    if s.scaled:
        raise StateError("scores are already scaled by sqrt(key_dim)")
    if key_dim <= 0:
        raise DimensionError(f"key_dim must be positive, got {key_dim}")
    scaled = (s.matrix.astype(ACC_DTYPE) / math.sqrt(key_dim)).astype(DTYPE)
    return replace(s, matrix=scaled, scaled=True)
