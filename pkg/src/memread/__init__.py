"""Affinity-based memory readout kernels and diagnostics."""
from memread.core import KeySet, ShapeSpec, ValueSet, new_matrix, transpose_multiply
from memread.costmodel import Ledger, key_storage_bytes, similarity_flops
from memread.membank import (
    Architecture,
    MemoryBank,
    SchedulePolicy,
    decide_memorize,
    simulate_costs,
)
from memread.readout import (
    AffinityMatrix,
    memory_affinity,
    normalize_affinity,
    readout_multi,
    readout_single,
    topk_filter,
)
from memread.similarity import (
    ScoreMatrix,
    SimilarityMeasure,
    l2_scores_fast,
    pairwise_scores,
    scale_scores,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix",
    "Architecture",
    "KeySet",
    "Ledger",
    "MemoryBank",
    "SchedulePolicy",
    "ScoreMatrix",
    "ShapeSpec",
    "SimilarityMeasure",
    "ValueSet",
    "decide_memorize",
    "key_storage_bytes",
    "l2_scores_fast",
    "memory_affinity",
    "new_matrix",
    "normalize_affinity",
    "pairwise_scores",
    "readout_multi",
    "readout_single",
    "scale_scores",
    "similarity_flops",
    "simulate_costs",
    "topk_filter",
    "transpose_multiply",
]
