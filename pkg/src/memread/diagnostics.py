"""How evenly does the memory get used?

Two families of tools:

* lifetime statistics over real affinities: the largest weight each memory
  node ever receives, how many nodes clear a threshold, and the Gini
  coefficient of those maxima;
* 2-D geometry: which memory point wins each cell of a query grid under a
  similarity measure (a Voronoi diagram for L2), which points never win,
  and the soft per-point weight fields.

Grid work runs in float64 and is chunked over cells.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from memread.core import ACC_DTYPE, KeySet
from memread.errors import AlignmentError, DegenerateInputError
from memread.readout import AffinityMatrix, _softmax_columns64, memory_affinity
from memread.similarity import SimilarityMeasure, _cosine64, _dot64, _l2_naive64

DEFAULT_RESOLUTION = 256
_CELL_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class ContributionRecord:
    lifetime_max: np.ndarray

    @property
    def node_count(self) -> int:
        return self.lifetime_max.shape[0]


@dataclass(frozen=True)
class GridSpec:
    x_range: tuple
    y_range: tuple
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError(f"resolution must be >= 2, got {self.resolution}")
        for name in ("x_range", "y_range"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ValueError(f"{name} must be a non-degenerate interval, got {lo, hi}")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """``"x0,x1,y0,y1,res"`` -> GridSpec."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 5:
            raise ValueError(f"grid must be x0,x1,y0,y1,res; got {text!r}")
        x0, x1, y0, y1 = map(float, parts[:4])
        return cls((x0, x1), (y0, y1), int(parts[4]))

    def axes(self):
        """Cell-centre coordinates along x and y."""
        def centres(lo, hi):
            step = (hi - lo) / self.resolution
            return lo + (np.arange(self.resolution) + 0.5) * step

        return centres(*self.x_range), centres(*self.y_range)

    def centers(self) -> np.ndarray:
        """(res*res, 2) cell centres, y-major: row r of the label grid is y index r."""
        xs, ys = self.axes()
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def contains(self, points: np.ndarray) -> bool:
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        p = np.asarray(points, dtype=ACC_DTYPE)
        return bool(
            np.all((p[:, 0] >= x0) & (p[:, 0] <= x1) & (p[:, 1] >= y0) & (p[:, 1] <= y1))
        )


# --- lifetime statistics -------------------------------------------------

def lifetime_max_contribution(
    affinity_sequence: Sequence[AffinityMatrix],
    node_alignment: Optional[Sequence[Sequence[int]]] = None,
    node_count: Optional[int] = None,
) -> ContributionRecord:
    """Largest weight each persistent memory node receives over a sequence.

    ``node_alignment[t][i]`` is the persistent id of row i of affinity t.
    Without an alignment every affinity must have the same rows, taken as
    the ids themselves. Nodes that never appear keep a maximum of 0.
    """
    affinity_sequence = list(affinity_sequence)
    if not affinity_sequence:
        raise ValueError("empty affinity sequence")
    if node_alignment is None:
        rows = {w.rows for w in affinity_sequence}
        if len(rows) != 1:
            raise AlignmentError(
                f"affinities have different row counts {sorted(rows)}; pass node_alignment"
            )
        node_alignment = [np.arange(affinity_sequence[0].rows)] * len(affinity_sequence)
    if len(node_alignment) != len(affinity_sequence):
        raise AlignmentError(
            f"{len(node_alignment)} alignments for {len(affinity_sequence)} affinities"
        )
    ids = [np.asarray(a, dtype=np.int64) for a in node_alignment]
    top = max(int(a.max()) for a in ids if a.size) + 1
    if node_count is None:
        node_count = top
    elif top > node_count:
        raise AlignmentError(f"node id {top - 1} out of range for {node_count} nodes")
    out = np.zeros(node_count, dtype=ACC_DTYPE)
    for t, (w, a) in enumerate(zip(affinity_sequence, ids)):
        if a.shape != (w.rows,):
            raise AlignmentError(
                f"affinity {t} has {w.rows} rows but its alignment has {a.size} ids"
            )
        if a.size and a.min() < 0:
            raise AlignmentError(f"affinity {t}: negative node id")
        if np.unique(a).size != a.size:
            raise AlignmentError(f"affinity {t}: a node id is used by two rows")
        np.maximum.at(out, a, w.matrix.max(axis=1).astype(ACC_DTYPE))
    return ContributionRecord(out)


def coverage_curve(record: ContributionRecord, thresholds) -> np.ndarray:
    """For each threshold, how many nodes ever exceeded it (strictly)."""
    t = np.asarray(thresholds, dtype=ACC_DTYPE).ravel()
    if t.size and np.any(np.diff(t) < 0):
        raise ValueError("thresholds must be in ascending order")
    maxima = np.sort(record.lifetime_max)
    # count of maxima > t  ==  n - (number of maxima <= t)
    return maxima.size - np.searchsorted(maxima, t, side="right")


def gini(values) -> float:
    """Population Gini coefficient, sum_ij |x_i - x_j| / (2 n^2 mean), in [0, 1).

    Multiply by 100 for the percent-style figures quoted in the literature.
    """
    x = np.sort(np.asarray(values, dtype=ACC_DTYPE).ravel())
    if x.size == 0:
        raise ValueError("gini of an empty vector")
    if np.any(x < 0):
        raise ValueError("gini needs nonnegative values")
    total = x.sum()
    if not total > 0:
        raise DegenerateInputError("gini undefined for an all-zero vector")
    n = x.size
    ranks = np.arange(1, n + 1, dtype=ACC_DTYPE)
    # the sorted sum is nonnegative in exact arithmetic; clamp rounding residue
    return max(0.0, float(np.dot(2 * ranks - n - 1, x) / (n * total)))


# --- 2-D geometry --------------------------------------------------------

def _points(memory_points, distinct: bool = True) -> np.ndarray:
    p = np.asarray(memory_points, dtype=ACC_DTYPE)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 1:
        raise ValueError(f"expected a non-empty (n, 2) point array, got shape {p.shape}")
    if distinct and np.unique(p, axis=0).shape[0] != p.shape[0]:
        raise ValueError("memory points must be distinct")
    return p


def _grid_scores(points: np.ndarray, cells: np.ndarray, measure: SimilarityMeasure):
    """(n_points, n_cells) float64 similarities; L2 always uses the exact form."""
    if measure is SimilarityMeasure.DOT:
        return _dot64(points.T, cells.T)
    if measure is SimilarityMeasure.COSINE:
        return _cosine64(points.T, cells.T)
    return _l2_naive64(points.T, cells.T)


def argmax_labels(memory_points, grid: GridSpec, measure: SimilarityMeasure) -> np.ndarray:
    """(res, res) int array: index of the most similar point for each cell.

    Row index is the y cell, column index the x cell. Ties go to the lowest
    point index.
    """
    p = _points(memory_points)
    cells = grid.centers()
    labels = np.empty(cells.shape[0], dtype=np.int64)
    for start in range(0, cells.shape[0], _CELL_CHUNK):
        chunk = cells[start:start + _CELL_CHUNK]
        labels[start:start + chunk.shape[0]] = np.argmax(
            _grid_scores(p, chunk, measure), axis=0
        )
    return labels.reshape(grid.resolution, grid.resolution)


def dominated_nodes(memory_points, grid: GridSpec, measure: SimilarityMeasure) -> set:
    """Indices of points that are the most similar point for no grid cell.

    Under L2 this is empty as long as the grid resolves every point (no two
    points closer than about a cell).
    """
    p = _points(memory_points)
    if not grid.contains(p):
        raise ValueError("grid must cover every memory point")
    winners = np.unique(argmax_labels(p, grid, measure))
    return set(range(p.shape[0])) - {int(i) for i in winners}


def contribution_field(
    memory_points,
    grid: GridSpec,
    measure: SimilarityMeasure,
    temperature: float = 1.0,
) -> np.ndarray:
    """(n_points, res, res) softmax weight of every point at every cell."""
    p = _points(memory_points, distinct=False)
    cells = grid.centers()
    out = np.empty((p.shape[0], cells.shape[0]), dtype=ACC_DTYPE)
    for start in range(0, cells.shape[0], _CELL_CHUNK):
        chunk = cells[start:start + _CELL_CHUNK]
        scores = _grid_scores(p, chunk, measure)
        out[:, start:start + chunk.shape[0]] = _softmax_columns64(scores, temperature)
    return out.reshape(p.shape[0], grid.resolution, grid.resolution)


def scene_contributions(
    memory_points,
    grid: GridSpec,
    measure: SimilarityMeasure,
    topk: Optional[int] = 20,
    scale: bool = True,
    temperature: Optional[float] = None,
) -> ContributionRecord:
    """Treat 2-D points as memory keys and grid cells as one query frame.

    Runs the regular affinity pipeline (scores, sqrt(C^k) scaling, top-k,
    softmax) and returns each point's largest weight over all cells.
    """
    p = _points(memory_points, distinct=False)
    km = KeySet(p.T)
    kq = KeySet(grid.centers().T)
    w = memory_affinity(km, kq, measure, topk=topk, temperature=temperature, scale=scale)
    return lifetime_max_contribution([w])
