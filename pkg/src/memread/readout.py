"""Affinity normalisation, top-k filtering and memory readout."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from memread.core import ACC_DTYPE, DTYPE, ValueSet, as_matrix
from memread.errors import DegenerateInputError, DimensionError
from memread.similarity import (
    ScoreMatrix,
    SimilarityMeasure,
    pairwise_scores,
    scale_scores,
)

DEFAULT_TOPK = 20
COSINE_TEMPERATURE = 0.01


def default_temperature(measure: SimilarityMeasure) -> float:
    return COSINE_TEMPERATURE if measure is SimilarityMeasure.COSINE else 1.0


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    """Column-stochastic weights; column j is the distribution over memory for query j."""

    matrix: np.ndarray
    k_used: Optional[int] = None

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]


def _softmax_columns64(scores: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Column softmax of ``scores / temperature`` in float64; -inf maps to 0."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    x = np.asarray(scores, dtype=ACC_DTYPE) / temperature
    peak = x.max(axis=0)
    dead = np.flatnonzero(~np.isfinite(peak))
    if dead.size:
        raise DegenerateInputError(
            f"column {int(dead[0])} has no finite score to normalise"
        )
    x -= peak
    np.exp(x, out=x)
    x /= x.sum(axis=0)
    return x


_TINY = np.nextafter(DTYPE(0), DTYPE(1))


def normalize_affinity(s: ScoreMatrix, temperature: float = 1.0) -> AffinityMatrix:
    """Column softmax stored as float32.

    Entries with a finite score stay strictly positive: weights that underflow
    in float32 (sharp cosine temperatures do this) are rounded up to the
    smallest subnormal, so the support always equals the kept set.
    """
    w = _softmax_columns64(s.matrix, temperature).astype(DTYPE)
    lost = (w == 0) & np.isfinite(s.matrix)
    if lost.any():
        w[lost] = _TINY
    return AffinityMatrix(w, s.topk)


def _topk_mask(scores: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the k largest entries per column, ties to the lower row."""
    kth = -np.partition(-scores, k - 1, axis=0)[k - 1]
    above = scores > kth
    need = k - above.sum(axis=0)
    at = scores == kth
    # among entries equal to the k-th value keep the first `need` in row order
    keep_at = at & (np.cumsum(at, axis=0) <= need)
    return above | keep_at


def topk_filter(s: ScoreMatrix, k: int = DEFAULT_TOPK) -> ScoreMatrix:
    """Keep the k largest scores in each column and set the rest to -inf."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= s.rows:
        return replace(s, topk=k)
    filtered = np.where(_topk_mask(s.matrix, k), s.matrix, -np.inf).astype(DTYPE)
    return replace(s, matrix=filtered, topk=k)


def _as_values(v) -> ValueSet:
    return v if isinstance(v, ValueSet) else ValueSet(v)


def _readout64(values: np.ndarray, weights64: np.ndarray) -> np.ndarray:
    return (values.astype(ACC_DTYPE) @ weights64).astype(DTYPE)


def readout_single(vm, w: AffinityMatrix, ledger=None) -> ValueSet:
    """Aggregate memory values with the affinity: ``vQ = vM @ W``."""
    vm = _as_values(vm)
    if vm.count != w.rows:
        raise DimensionError(
            f"value set has {vm.count} memory nodes, affinity has {w.rows} rows"
        )
    if ledger is not None:
        ledger.record_affinity()
    return ValueSet(_readout64(vm.matrix, w.matrix.astype(ACC_DTYPE)))


def readout_multi(values_per_object: Sequence, w: AffinityMatrix, ledger=None) -> list:
    """Read out every object through one shared affinity.

    The affinity is counted once on ``ledger`` no matter how many objects.
    """
    values = [_as_values(v) for v in values_per_object]
    if not values:
        raise ValueError("readout_multi needs at least one object")
    for idx, vm in enumerate(values):
        if vm.count != w.rows:
            raise DimensionError(
                f"object {idx}: value set has {vm.count} memory nodes, "
                f"affinity has {w.rows} rows"
            )
    if ledger is not None:
        ledger.record_affinity()
    w64 = w.matrix.astype(ACC_DTYPE)
    return [ValueSet(_readout64(vm.matrix, w64)) for vm in values]


def affinity_from_array(matrix, atol: float = 1e-5) -> AffinityMatrix:
    """Wrap a precomputed weight matrix after checking it is column-stochastic."""
    w = as_matrix(matrix, "affinity")
    if not np.all(np.isfinite(w)) or w.min() < 0:
        raise DegenerateInputError("affinity entries must be finite and nonnegative")
    sums = w.astype(ACC_DTYPE).sum(axis=0)
    off = np.flatnonzero(np.abs(sums - 1.0) > atol)
    if off.size:
        j = int(off[0])
        raise DegenerateInputError(f"affinity column {j} sums to {sums[j]:.9g}, not 1")
    return AffinityMatrix(w)


def memory_affinity(
    km,
    kq,
    measure: SimilarityMeasure = SimilarityMeasure.L2_DECOMPOSED,
    topk: Optional[int] = DEFAULT_TOPK,
    temperature: Optional[float] = None,
    scale: bool = True,
) -> AffinityMatrix:
    """Scores -> optional sqrt(C^k) scaling -> optional top-k -> softmax.

    Scaling is skipped for cosine, which is shaped by its temperature
    instead. ``temperature=None`` picks the per-measure default.
    """
    s = pairwise_scores(km, kq, measure)
    if scale and measure is not SimilarityMeasure.COSINE:
        s = scale_scores(s, km.channels)
    if topk:
        s = topk_filter(s, topk)
    if temperature is None:
        temperature = default_temperature(measure)
    return normalize_affinity(s, temperature)
