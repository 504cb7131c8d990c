"""Seeded synthetic inputs: 2-D point scenes, random keys/values, drifting keys.

Every generator draws from ``numpy.random.Generator(PCG64(seed))`` and is a
pure function of its arguments. The draw order inside each generator is
part of the output contract (golden files depend on it); changing it means
bumping :data:`GENERATOR_VERSION`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from memread.core import DTYPE, KeySet, ShapeSpec, ValueSet

GENERATOR_VERSION = "pcg64-v1"

OUTLIER_SCENE_CENTERS = ((1.0, 1.0), (-1.0, 1.0), (0.0, -1.0))
OUTLIER_SCENE_POINTS_PER_CLUSTER = 30
OUTLIER_SCENE_SPREAD = 0.15
OUTLIER_SCENE_OUTLIER = (4.0, 4.0)


def make_rng(seed: int) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SceneSpec:
    cluster_count: int = 3
    points_per_cluster: int = 30
    cluster_spread: float = 0.15
    outlier_magnitude: float = 0.0
    seed: int = 0
    # None: centres uniform in [-1, 1]^2 drawn from the seed
    centers: Optional[Sequence[Sequence[float]]] = None
    # None: outlier direction drawn from the seed
    outlier_angle: Optional[float] = None

    def __post_init__(self):
        if self.cluster_count < 1 or self.points_per_cluster < 1:
            raise ValueError("cluster_count and points_per_cluster must be >= 1")
        if not self.cluster_spread > 0:
            raise ValueError(f"cluster_spread must be > 0, got {self.cluster_spread}")
        if self.outlier_magnitude < 0:
            raise ValueError("outlier_magnitude must be >= 0")
        if self.centers is not None and len(self.centers) != self.cluster_count:
            raise ValueError(
                f"{len(self.centers)} centers given for {self.cluster_count} clusters"
            )


def gaussian_mixture(spec: SceneSpec) -> np.ndarray:
    """Isotropic Gaussian clusters in 2-D, cluster-major order, as an (n, 2) array.

    With ``outlier_magnitude > 0`` one more point is appended at that
    distance from the origin.
    """
    rng = make_rng(spec.seed)
    k, per = spec.cluster_count, spec.points_per_cluster
    if spec.centers is None:
        centers = rng.uniform(-1.0, 1.0, size=(k, 2))
    else:
        centers = np.asarray(spec.centers, dtype=np.float64).reshape(k, 2)
    noise = rng.standard_normal((k * per, 2))
    points = np.repeat(centers, per, axis=0) + spec.cluster_spread * noise
    if spec.outlier_magnitude > 0:
        angle = spec.outlier_angle
        if angle is None:
            angle = rng.uniform(0.0, 2.0 * math.pi)
        outlier = spec.outlier_magnitude * np.array([[math.cos(angle), math.sin(angle)]])
        points = np.vstack([points, outlier])
    return points.astype(DTYPE)


def outlier_scene(seed: int = 0) -> np.ndarray:
    """Three tight clusters plus one far, high-magnitude outlier: 91 points."""
    clusters = gaussian_mixture(
        SceneSpec(
            cluster_count=len(OUTLIER_SCENE_CENTERS),
            points_per_cluster=OUTLIER_SCENE_POINTS_PER_CLUSTER,
            cluster_spread=OUTLIER_SCENE_SPREAD,
            outlier_magnitude=0.0,
            seed=seed,
            centers=OUTLIER_SCENE_CENTERS,
        )
    )
    return np.vstack([clusters, np.array([OUTLIER_SCENE_OUTLIER], dtype=DTYPE)])


def random_matrix(rows: int, cols: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Standard normal entries times ``scale``, float32."""
    rng = make_rng(seed)
    return (scale * rng.standard_normal((rows, cols))).astype(DTYPE)


def random_keys(channels: int, count: int, seed: int) -> KeySet:
    return KeySet(random_matrix(channels, count, seed))


def random_values(channels: int, count: int, seed: int) -> ValueSet:
    return ValueSet(random_matrix(channels, count, seed))


@dataclass(frozen=True)
class DriftSpec:
    length: int
    shape: ShapeSpec
    drift_rate: float = 0.1
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.length < 2:
            raise ValueError(f"length must be >= 2, got {self.length}")
        if self.drift_rate < 0 or self.noise_scale < 0:
            raise ValueError("drift_rate and noise_scale must be >= 0")


def drifting_key_sequence(spec: DriftSpec) -> list[KeySet]:
    """Per-frame query keys that wander smoothly.

    Each column of frame f is the same column of frame f-1 moved by
    ``drift_rate`` along its own random unit direction, plus isotropic
    Gaussian noise of scale ``noise_scale``.
    """
    rng = make_rng(spec.seed)
    shape = (spec.shape.key_dim, spec.shape.query_nodes)
    current = rng.standard_normal(shape)
    frames = [KeySet(current.astype(DTYPE))]
    for _ in range(1, spec.length):
        direction = rng.standard_normal(shape)
        direction /= np.linalg.norm(direction, axis=0)
        noise = rng.standard_normal(shape)
        current = current + spec.drift_rate * direction + spec.noise_scale * noise
        frames.append(KeySet(current.astype(DTYPE)))
    return frames
