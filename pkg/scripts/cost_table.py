"""Print the analytic similarity FLOPs and key sizes at the desk shape.

    python3 scripts/cost_table.py [--t 10 --h 30 --w 54]
"""
import argparse

from memread.core import ShapeSpec
from memread.costmodel import bench_table
from memread.similarity import SimilarityMeasure


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=int, default=10)
    ap.add_argument("--h", type=int, default=30)
    ap.add_argument("--w", type=int, default=54)
    args = ap.parse_args()

    shape = ShapeSpec(frames_in_memory=args.t, height=args.h, width=args.w)
    measures = [SimilarityMeasure.DOT, SimilarityMeasure.COSINE, SimilarityMeasure.L2_DECOMPOSED,
                SimilarityMeasure.L2_NAIVE]
    rows = bench_table([128, 64], shape, measures)
    dot = {r["ck"]: r["flops"] for r in rows if r["measure"] == "dot"}
    print(f"T={args.t} H={args.h} W={args.w}  ({shape.memory_nodes * shape.query_nodes:,} pairs)")
    print(f"{'measure':<8} {'Ck':>4} {'GFLOPs':>8} {'vs dot':>8} {'keys MB':>8}")
    for r in rows:
        print(f"{r['measure']:<8} {r['ck']:>4} {r['flops'] / 1e9:>8.2f} "
              f"{r['flops'] / dot[r['ck']]:>8.3f} {r['key_bytes'] / 1e6:>8.2f}")


if __name__ == "__main__":
    main()
