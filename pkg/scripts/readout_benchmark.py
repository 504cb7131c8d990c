"""Time one full memory readout at desk scale, single-threaded.

Compares the decomposed L2 score path with the naive one and with plain dot.
"""
import argparse
import time

from threadpoolctl import threadpool_limits

from memread.core import ShapeSpec
from memread.readout import memory_affinity, readout_single
from memread.similarity import SimilarityMeasure, l2_scores_fast, pairwise_scores
from memread.synth import random_keys, random_values


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ck", type=int, default=64)
    ap.add_argument("--cv", type=int, default=512)
    ap.add_argument("--t", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--skip-naive", action="store_true")
    args = ap.parse_args()

    shape = ShapeSpec(args.ck, args.cv, args.t, 30, 54)
    km = random_keys(args.ck, shape.memory_nodes, 1)
    kq = random_keys(args.ck, shape.query_nodes, 2)
    vm = random_values(args.cv, shape.memory_nodes, 3)

    with threadpool_limits(1):
        full = timed(lambda: readout_single(vm, memory_affinity(km, kq)), args.repeat)
        fast = timed(lambda: l2_scores_fast(km, kq), args.repeat)
        dot = timed(lambda: pairwise_scores(km, kq, SimilarityMeasure.DOT), args.repeat)
        print(f"full readout (l2fast, top-20): {full:.3f}s")
        print(f"scores  dot    {dot:.3f}s")
        print(f"scores  l2fast {fast:.3f}s")
        if not args.skip_naive:
            naive = timed(lambda: pairwise_scores(km, kq, SimilarityMeasure.L2_NAIVE), 1)
            print(f"scores  l2     {naive:.3f}s  ({naive / fast:.1f}x slower than l2fast)")


if __name__ == "__main__":
    main()
