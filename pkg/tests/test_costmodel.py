from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from memread.core import ShapeSpec
from memread.costmodel import FlopEstimate, Ledger, bench_table, key_storage_bytes, similarity_flops
from memread.similarity import SimilarityMeasure

DOT = SimilarityMeasure.DOT
COS = SimilarityMeasure.COSINE
L2F = SimilarityMeasure.L2_DECOMPOSED
DESK = ShapeSpec(64, 512, 10, 30, 54)

shapes = st.builds(
    ShapeSpec,
    key_dim=st.integers(1, 256),
    value_dim=st.just(512),
    frames_in_memory=st.integers(1, 40),
    height=st.integers(1, 80),
    width=st.integers(1, 80),
)


@given(shapes)
def test_dot_flops_double_with_key_dim(shape):
    assert Fraction(similarity_flops(DOT, 128, shape), similarity_flops(DOT, 64, shape)) == 2


def test_unit_shape_is_one_multiply_add():
    assert similarity_flops(DOT, 1, ShapeSpec(1, 1, 1, 1, 1)) == 2


@given(st.integers(10, 10), st.integers(1500, 6000))
def test_l2_overhead_small_at_desk_scale(t, hw):
    shape = ShapeSpec(64, 512, t, 1, hw)
    dot = similarity_flops(DOT, 64, shape)
    l2 = similarity_flops(L2F, 64, shape)
    assert 0 < (l2 - dot) / dot <= 0.03


def test_formulas_by_hand():
    s = ShapeSpec(8, 1, 2, 1, 3)  # THW = 6, HW = 3
    assert similarity_flops(DOT, 8, s) == 2 * 8 * 6 * 3
    assert similarity_flops(COS, 8, s) == 2 * 8 * 6 * 3 + 3 * 8 * 9
    assert similarity_flops(L2F, 8, s) == 2 * 8 * 6 * 3 + 2 * 8 * 6 + 2 * 6 * 3
    assert similarity_flops(SimilarityMeasure.L2_NAIVE, 8, s) == 3 * 8 * 6 * 3


@given(shapes, st.sampled_from(list(SimilarityMeasure)))
def test_doubling_t_doubles_dot_like_terms(shape, measure):
    from dataclasses import replace

    twice = replace(shape, frames_in_memory=2 * shape.frames_in_memory)
    a = similarity_flops(measure, shape.key_dim, shape)
    b = similarity_flops(measure, shape.key_dim, twice)
    if measure is COS:
        # normalisation of the (unchanged) query side does not scale with T
        assert b - 2 * a == -3 * shape.key_dim * shape.query_nodes
    else:
        assert b == 2 * a


def test_key_storage():
    assert key_storage_bytes(1, ShapeSpec(1, 1, 1, 1, 1)) == 4
    assert key_storage_bytes(64, DESK) == 4_147_200
    assert key_storage_bytes(128, DESK) == 2 * key_storage_bytes(64, DESK)


@pytest.mark.parametrize(
    "measure,ck,reference_gflops",
    [(DOT, 128, 6.26), (COS, 128, 6.26), (L2F, 128, 6.33), (DOT, 64, 3.13), (COS, 64, 3.13), (L2F, 64, 3.20)],
)
def test_desk_shape_within_ten_percent_of_table(measure, ck, reference_gflops):
    flops = similarity_flops(measure, ck, DESK)
    assert abs(flops / 1e9 - reference_gflops) / reference_gflops <= 0.10


@pytest.mark.parametrize("ck,reference_mb", [(128, 8.70), (64, 4.35)])
def test_desk_key_size_within_ten_percent(ck, reference_mb):
    assert abs(key_storage_bytes(ck, DESK) / 1e6 - reference_mb) / reference_mb <= 0.10


def test_flop_estimate_and_table():
    assert FlopEstimate(DOT, 64, DESK).flops == similarity_flops(DOT, 64, DESK)
    rows = bench_table([64, 128], DESK)
    assert len(rows) == 6
    assert list(rows[0]) == ["measure", "ck", "T", "H", "W", "flops", "key_bytes"]
    dot = {r["ck"]: r["flops"] for r in rows if r["measure"] == "dot"}
    assert dot[128] / dot[64] == 2.0


def test_ledger_counters():
    ledger = Ledger()
    ledger.record_affinity()
    ledger.record_similarity_flops(10)
    ledger.record_key_bytes(8)
    assert (ledger.affinity_count, ledger.similarity_flops, ledger.key_bytes) == (1, 10, 8)
    with pytest.raises(ValueError):
        ledger.record_key_bytes(-1)
    with pytest.raises(ValueError):
        ledger.record_similarity_flops(-5)
