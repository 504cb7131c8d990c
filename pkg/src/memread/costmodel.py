"""Analytic FLOP / storage accounting for one memory read, and a run ledger.

Convention: a multiply-add counts as 2 FLOPs. Only the similarity step is
counted (no softmax, no readout), matching how the key-space comparison
table was tabulated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from memread.core import ShapeSpec
from memread.similarity import SimilarityMeasure

BYTES_PER_FLOAT = 4


def similarity_flops(measure: SimilarityMeasure, key_dim: int, shape: ShapeSpec) -> int:
    """FLOPs to build the THW x HW score matrix for one query frame.

    ``key_dim`` overrides ``shape.key_dim`` so one shape can be swept over C^k.

    - dot:     2 C THW HW
    - cosine:  dot + 3 C (THW + HW)        (square-sum, sqrt/divide per element)
    - l2fast:  dot + 2 C THW + 2 THW HW    (memory norms; scale-by-2 and subtract)
    - l2:      3 C THW HW                  (subtract, square, accumulate)
    """
    m, n = shape.memory_nodes, shape.query_nodes
    dot = 2 * key_dim * m * n
    if measure is SimilarityMeasure.DOT:
        return dot
    if measure is SimilarityMeasure.COSINE:
        return dot + 3 * key_dim * (m + n)
    if measure is SimilarityMeasure.L2_DECOMPOSED:
        return dot + 2 * key_dim * m + 2 * m * n
    if measure is SimilarityMeasure.L2_NAIVE:
        return 3 * key_dim * m * n
    raise ValueError(f"unknown measure {measure!r}")


def key_storage_bytes(key_dim: int, shape: ShapeSpec) -> int:
    """Bytes of float32 memory keys for T frames."""
    return key_dim * shape.memory_nodes * BYTES_PER_FLOAT


@dataclass
class FlopEstimate:
    measure: SimilarityMeasure
    key_dim: int
    shape: ShapeSpec
    flops: int = field(init=False)

    def __post_init__(self):
        self.flops = similarity_flops(self.measure, self.key_dim, self.shape)


def bench_table(key_dims, shape: ShapeSpec, measures=None) -> list[dict]:
    """Rows of (measure, ck, T, H, W, flops, key_bytes) for a C^k sweep."""
    if measures is None:
        measures = (
            SimilarityMeasure.DOT,
            SimilarityMeasure.COSINE,
            SimilarityMeasure.L2_DECOMPOSED,
        )
    rows = []
    for ck in key_dims:
        for measure in measures:
            rows.append(
                {
                    "measure": measure.value,
                    "ck": ck,
                    "T": shape.frames_in_memory,
                    "H": shape.height,
                    "W": shape.width,
                    "flops": similarity_flops(measure, ck, shape),
                    "key_bytes": key_storage_bytes(ck, shape),
                }
            )
    return rows


@dataclass
class Ledger:
    """Running counters for one propagation run. Counters only ever grow."""

    affinity_count: int = 0
    similarity_flops: int = 0
    key_bytes: int = 0
    key_encoder_calls: int = 0
    value_encoder_calls: int = 0

    def record_affinity(self):
        self.affinity_count += 1

    def record_similarity_flops(self, flops: int):
        if flops < 0:
            raise ValueError("flop count cannot be negative")
        self.similarity_flops += flops

    def record_key_bytes(self, nbytes: int):
        if nbytes < 0:
            raise ValueError("byte count cannot be negative")
        self.key_bytes += nbytes

    def record_key_encoder(self, calls: int = 1):
        self.key_encoder_calls += calls

    def record_value_encoder(self, calls: int = 1):
        self.value_encoder_calls += calls
