"""Write argmax-label and soft-contribution CSVs for the outlier scene.

Produces voronoi_{dot,l2}.csv and field_{dot,l2}.csv in --out-dir, ready to plot.
"""
import argparse
from pathlib import Path

import numpy as np

from memread.diagnostics import GridSpec, argmax_labels, contribution_field, dominated_nodes
from memread.similarity import SimilarityMeasure
from memread.synth import outlier_scene
from memread.tensorio import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid", default="-2,5,-2,5,256")
    ap.add_argument("--field-res", type=int, default=64)
    ap.add_argument("--out-dir", type=Path, default=Path("out"))
    args = ap.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    pts = outlier_scene(args.seed)
    grid = GridSpec.parse(args.grid)
    coarse = GridSpec(grid.x_range, grid.y_range, args.field_res)
    for name, measure in (("dot", SimilarityMeasure.DOT), ("l2", SimilarityMeasure.L2_NAIVE)):
        labels = argmax_labels(pts, grid, measure)
        gx, gy = np.meshgrid(*grid.axes())
        write_csv(args.out_dir / f"voronoi_{name}.csv",
                  {"x": gx.ravel(), "y": gy.ravel(), "label": labels.ravel()})

        field = contribution_field(pts, coarse, measure)
        cx, cy = np.meshgrid(*coarse.axes())
        n = pts.shape[0]
        write_csv(args.out_dir / f"field_{name}.csv", {
            "x": np.repeat(cx.ravel(), n),
            "y": np.repeat(cy.ravel(), n),
            "node": np.tile(np.arange(n), cx.size),
            "weight": field.reshape(n, -1).T.ravel(),
        })
        dominated = dominated_nodes(pts, grid, measure)
        print(f"{name}: {len(np.unique(labels))} winning nodes, {len(dominated)} dominated")


if __name__ == "__main__":
    main()
