import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memread.core import ShapeSpec
from memread.synth import (
    GENERATOR_VERSION,
    DriftSpec,
    SceneSpec,
    drifting_key_sequence,
    gaussian_mixture,
    make_rng,
    outlier_scene,
    random_keys,
    random_matrix,
)

SMALL = ShapeSpec(key_dim=8, value_dim=1, frames_in_memory=1, height=4, width=5)


def test_generator_label():
    assert GENERATOR_VERSION == "pcg64-v1"
    assert isinstance(make_rng(0).bit_generator, np.random.PCG64)


def test_seed_must_be_u64():
    with pytest.raises(ValueError):
        make_rng(-1)
    with pytest.raises(ValueError):
        make_rng(2**64)
    make_rng(2**64 - 1)


@given(st.integers(0, 2**64 - 1))
@settings(max_examples=20)
def test_same_seed_same_bytes(seed):
    assert outlier_scene(seed).tobytes() == outlier_scene(seed).tobytes()
    assert random_matrix(3, 4, seed).tobytes() == random_matrix(3, 4, seed).tobytes()


def test_different_seeds_differ():
    assert not np.array_equal(outlier_scene(0), outlier_scene(1))


def test_outlier_scene_layout():
    pts = outlier_scene(0)
    assert pts.shape == (91, 2) and pts.dtype == np.float32
    np.testing.assert_array_equal(pts[-1], [4, 4])
    for c, center in enumerate([(1, 1), (-1, 1), (0, -1)]):
        block = pts[30 * c: 30 * (c + 1)].astype(np.float64)
        assert np.linalg.norm(block.mean(axis=0) - center) < 0.15


def test_zero_spread_limit():
    centers = [(0.5, -0.25), (-0.75, 0.125)]
    pts = gaussian_mixture(SceneSpec(2, 10, 1e-9, seed=4, centers=centers))
    expect = np.repeat(np.array(centers), 10, axis=0)
    assert np.abs(pts - expect).max() < 1e-6


def test_mixture_outlier_at_magnitude():
    pts = gaussian_mixture(SceneSpec(outlier_magnitude=6.0, seed=2))
    assert pts.shape == (91, 2)
    assert np.linalg.norm(pts[-1]) == pytest.approx(6.0, rel=1e-6)
    pts = gaussian_mixture(SceneSpec(outlier_magnitude=3.0, outlier_angle=0.0))
    np.testing.assert_allclose(pts[-1], [3.0, 0.0], atol=1e-6)


def test_scene_spec_validation():
    with pytest.raises(ValueError):
        SceneSpec(cluster_spread=0)
    with pytest.raises(ValueError):
        SceneSpec(cluster_count=0)
    with pytest.raises(ValueError):
        SceneSpec(outlier_magnitude=-1)


def test_random_keys_statistics():
    k = random_keys(64, 2000, 11).matrix.astype(np.float64)
    assert k.shape == (64, 2000)
    assert abs(k.mean()) < 0.02 and abs(k.std() - 1) < 0.02


def test_frozen_drift_repeats_frames():
    frames = drifting_key_sequence(DriftSpec(4, SMALL, drift_rate=0.0, noise_scale=0.0))
    for f in frames[1:]:
        np.testing.assert_array_equal(f.matrix, frames[0].matrix)


@pytest.mark.parametrize("rate", [0.05, 0.5, 2.0])
def test_drift_step_size(rate):
    frames = drifting_key_sequence(DriftSpec(6, SMALL, drift_rate=rate, noise_scale=0.01, seed=3))
    assert len(frames) == 6 and frames[0].matrix.shape == (8, 20)
    for a, b in zip(frames, frames[1:]):
        step = np.linalg.norm(b.matrix.astype(np.float64) - a.matrix, axis=0).mean()
        assert abs(step - rate) <= 0.2 * rate + 0.05


def test_drift_validation():
    with pytest.raises(ValueError):
        DriftSpec(1, SMALL)
    with pytest.raises(ValueError):
        DriftSpec(3, SMALL, drift_rate=-0.1)
