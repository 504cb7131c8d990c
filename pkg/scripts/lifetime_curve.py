"""Lifetime-max contribution statistics for a memory of 2-D keys.

Queries a grid of cells against the outlier scene (or a mixture) under each
measure, then prints the Gini coefficient and the coverage curve.
"""
import argparse

import numpy as np

from memread.diagnostics import GridSpec, coverage_curve, gini, scene_contributions
from memread.similarity import SimilarityMeasure
from memread.synth import SceneSpec, gaussian_mixture, outlier_scene
from memread.tensorio import write_csv

THRESHOLDS = np.round(np.linspace(0.0, 0.95, 20), 2)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mixture", action="store_true", help="random mixture instead of the outlier scene")
    ap.add_argument("--grid", default="-2,5,-2,5,8")
    ap.add_argument("--topk", type=int, default=20)
    ap.add_argument("--out", help="optional CSV of coverage curves")
    args = ap.parse_args()

    if args.mixture:
        pts = gaussian_mixture(SceneSpec(seed=args.seed, outlier_magnitude=4.0))
    else:
        pts = outlier_scene(args.seed)
    grid = GridSpec.parse(args.grid)
    columns = {"threshold": THRESHOLDS}
    for measure in (SimilarityMeasure.DOT, SimilarityMeasure.COSINE, SimilarityMeasure.L2_DECOMPOSED):
        record = scene_contributions(pts, grid, measure, topk=args.topk)
        curve = coverage_curve(record, THRESHOLDS)
        columns[measure.value] = curve
        used = int((record.lifetime_max > 0.01).sum())
        print(f"{measure.value:<7} gini={gini(record.lifetime_max):.4f}  nodes>0.01: {used}/{record.node_count}")
    if args.out:
        write_csv(args.out, columns)


if __name__ == "__main__":
    main()
