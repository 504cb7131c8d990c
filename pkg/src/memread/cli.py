"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data / file / format error.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from memread import costmodel, diagnostics, membank, readout, similarity, synth
from memread.core import KeySet, ShapeSpec, ValueSet
from memread.similarity import SimilarityMeasure
from memread.tensorio import csv_text, read_tensor, rows_to_columns, write_tensor

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


# --- argument types (failures here are usage errors) ----------------------

def _csv_of(convert, what):
    def parse(text):
        try:
            items = [convert(p) for p in text.split(",") if p.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated {what}: {text!r}")
        if not items:
            raise argparse.ArgumentTypeError(f"empty list of {what}")
        return items

    return parse


def _measure(text):
    try:
        return SimilarityMeasure.parse(text)
    except ValueError:
        choices = "|".join(m.value for m in SimilarityMeasure)
        raise argparse.ArgumentTypeError(f"measure must be one of {choices}, got {text!r}")


def _grid(text):
    try:
        return diagnostics.GridSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


# --- helpers ------------------------------------------------------------

def _emit_csv(columns, out):
    text = csv_text(columns)
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_features(path, kind):
    """Rank 2 (C x N) or rank 3 (T x C x N, frames concatenated along N)."""
    arr = read_tensor(path)
    if arr.ndim == 3:
        arr = np.concatenate(list(arr), axis=1)
    if arr.ndim != 2:
        raise ValueError(f"{path}: expected a rank 2 or 3 tensor, got rank {arr.ndim}")
    return kind(arr)


def _load_points(path):
    arr = read_tensor(path)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{path}: expected an (n, 2) point tensor, got shape {arr.shape}")
    return arr


def _scores(km, kq, measure, scale, keep_query_norm=False):
    if measure is SimilarityMeasure.L2_DECOMPOSED:
        s = similarity.l2_scores_fast(km, kq, include_query_norm=keep_query_norm)
    else:
        s = similarity.pairwise_scores(km, kq, measure)
    if scale:
        s = similarity.scale_scores(s, km.channels)
    return s


# --- subcommands --------------------------------------------------------

def cmd_scores(args):
    km = _load_features(args.mem, KeySet)
    kq = _load_features(args.query, KeySet)
    s = _scores(km, kq, args.measure, args.scale, args.keep_query_norm)
    write_tensor(args.out, s.matrix)


def cmd_readout(args):
    if args.affinity and (args.mem or args.query):
        raise UsageError("readout: give either --affinity or --mem/--query, not both")
    values = [_load_features(p, ValueSet) for p in args.values]
    outs = args.out
    if len(outs) != len(values):
        raise UsageError(
            f"readout: {len(values)} value files but {len(outs)} output paths"
        )
    if args.affinity:
        w = readout.affinity_from_array(read_tensor(args.affinity))
    else:
        if not (args.mem and args.query):
            raise UsageError("readout: --mem and --query are required without --affinity")
        km = _load_features(args.mem, KeySet)
        kq = _load_features(args.query, KeySet)
        w = readout.memory_affinity(
            km,
            kq,
            args.measure,
            topk=args.topk or None,
            temperature=args.temperature,
            scale=not args.no_scale,
        )
    results = readout.readout_multi(values, w)
    for path, v in zip(outs, results):
        write_tensor(path, v.matrix)


def cmd_bench(args):
    shape = ShapeSpec(
        key_dim=args.ck[0], frames_in_memory=args.t, height=args.h, width=args.w
    )
    rows = costmodel.bench_table(args.ck, shape, args.measures)
    _emit_csv(rows_to_columns(rows), args.out)


def cmd_schedule(args):
    policy = membank.SchedulePolicy(args.every, args.temporary)
    archs = (
        list(membank.Architecture)
        if args.arch == "both"
        else [membank.Architecture(args.arch)]
    )
    rows = []
    for arch in archs:
        row = membank.simulate_costs(args.frames, args.objects, policy, arch).as_row()
        row["every"] = args.every
        row["temporary"] = int(args.temporary)
        rows.append(row)
    _emit_csv(rows_to_columns(rows), args.out)


def cmd_voronoi(args):
    points = _load_points(args.points)
    labels = diagnostics.argmax_labels(points, args.grid, args.measure)
    xs, ys = args.grid.axes()
    gx, gy = np.meshgrid(xs, ys)
    _emit_csv({"x": gx.ravel(), "y": gy.ravel(), "label": labels.ravel()}, args.out)


def cmd_field(args):
    points = _load_points(args.points)
    temperature = args.temperature
    if temperature is None:
        temperature = readout.default_temperature(args.measure)
    field = diagnostics.contribution_field(points, args.grid, args.measure, temperature)
    n = points.shape[0]
    xs, ys = args.grid.axes()
    gx, gy = np.meshgrid(xs, ys)
    cells = gx.size
    _emit_csv(
        {
            "x": np.repeat(gx.ravel(), n),
            "y": np.repeat(gy.ravel(), n),
            "node": np.tile(np.arange(n), cells),
            "weight": field.reshape(n, cells).T.ravel(),
        },
        args.out,
    )


def cmd_gini(args):
    value = diagnostics.gini(read_tensor(args.input))
    print(format(value, ".9g"))


def cmd_curve(args):
    maxima = read_tensor(args.input).ravel()
    record = diagnostics.ContributionRecord(maxima.astype(np.float64))
    counts = diagnostics.coverage_curve(record, args.thresholds)
    _emit_csv({"threshold": args.thresholds, "count": counts}, args.out)


def cmd_synth(args):
    if args.scene == "outlier":
        data = synth.outlier_scene(args.seed)
    elif args.scene == "mixture":
        data = synth.gaussian_mixture(
            synth.SceneSpec(
                cluster_count=args.clusters,
                points_per_cluster=args.per_cluster,
                cluster_spread=args.spread,
                outlier_magnitude=args.outlier,
                seed=args.seed,
            )
        )
    elif args.scene == "keys":
        data = synth.random_matrix(args.rows, args.cols, args.seed)
    else:
        shape = ShapeSpec(key_dim=args.ck, frames_in_memory=1, height=args.h, width=args.w)
        frames = synth.drifting_key_sequence(
            synth.DriftSpec(args.frames, shape, args.drift, args.noise, args.seed)
        )
        data = np.stack([f.matrix for f in frames])
    write_tensor(args.out, data)


# --- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="memread", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    measures = "|".join(m.value for m in SimilarityMeasure)

    p = sub.add_parser("scores", help="pairwise similarity matrix (THW x HW)")
    p.add_argument("--measure", type=_measure, default=SimilarityMeasure.L2_DECOMPOSED,
                   help=f"{measures} (default l2fast)")
    p.add_argument("--mem", required=True, help="memory keys, C x THW (or T x C x HW)")
    p.add_argument("--query", required=True, help="query keys, C x HW")
    p.add_argument("--scale", action="store_true", help="divide by sqrt(C^k)")
    p.add_argument("--keep-query-norm", action="store_true",
                   help="l2fast only: keep the per-query |kQ|^2 term")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scores)

    p = sub.add_parser("readout", help="affinity-weighted value readout")
    p.add_argument("--affinity", help="precomputed column-stochastic affinity")
    p.add_argument("--mem")
    p.add_argument("--query")
    p.add_argument("--measure", type=_measure, default=SimilarityMeasure.L2_DECOMPOSED)
    p.add_argument("--topk", type=int, default=readout.DEFAULT_TOPK,
                   help="keep the k best memory nodes per query (0 disables)")
    p.add_argument("--temperature", type=float, default=None,
                   help="softmax temperature (default 0.01 for cos, else 1)")
    p.add_argument("--no-scale", action="store_true", help="skip sqrt(C^k) scaling")
    p.add_argument("--values", type=_csv_of(str, "paths"), required=True,
                   help="one value file per object, comma separated")
    p.add_argument("--out", type=_csv_of(str, "paths"), required=True,
                   help="one output path per value file")
    p.set_defaults(func=cmd_readout)

    p = sub.add_parser("bench", help="analytic FLOP / key-size table")
    p.add_argument("--ck", type=_csv_of(int, "integers"), default=[64, 128])
    p.add_argument("--t", type=_positive_int, default=10)
    p.add_argument("--h", type=_positive_int, default=30)
    p.add_argument("--w", type=_positive_int, default=54)
    p.add_argument("--measures", type=_csv_of(_measure, "measures"),
                   default=[SimilarityMeasure.DOT, SimilarityMeasure.COSINE,
                            SimilarityMeasure.L2_DECOMPOSED])
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("schedule", help="encoder / affinity invocation counts")
    p.add_argument("--frames", type=_positive_int, required=True)
    p.add_argument("--objects", type=_positive_int, default=1)
    p.add_argument("--every", type=_positive_int, default=5)
    p.add_argument("--temporary", action="store_true", help="add the previous frame")
    p.add_argument("--arch", choices=["stm", "stcn", "both"], default="stcn")
    p.add_argument("--out")
    p.set_defaults(func=cmd_schedule)

    for name, helptext in (("voronoi", "argmax label grid"), ("field", "softmax weight field")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--points", required=True, help="(n, 2) memory points")
        p.add_argument("--grid", type=_grid, required=True, help="x0,x1,y0,y1,res (use --grid=... when x0 is negative)")
        p.add_argument("--measure", type=_measure, default=SimilarityMeasure.L2_NAIVE)
        if name == "field":
            p.add_argument("--temperature", type=float, default=None)
        p.add_argument("--out")
        p.set_defaults(func=cmd_voronoi if name == "voronoi" else cmd_field)

    p = sub.add_parser("gini", help="Gini coefficient of a nonnegative tensor")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_gini)

    p = sub.add_parser("curve", help="coverage counts of lifetime maxima")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--thresholds", type=_csv_of(float, "numbers"), required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("synth", help="seeded synthetic scenes and keys")
    p.add_argument("--scene", choices=["outlier", "mixture", "keys", "drift"],
                   default="outlier")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--clusters", type=_positive_int, default=3)
    p.add_argument("--per-cluster", type=_positive_int, default=30)
    p.add_argument("--spread", type=float, default=0.15)
    p.add_argument("--outlier", type=float, default=0.0)
    p.add_argument("--rows", type=_positive_int, default=64)
    p.add_argument("--cols", type=_positive_int, default=1620)
    p.add_argument("--frames", type=_positive_int, default=10)
    p.add_argument("--ck", type=_positive_int, default=64)
    p.add_argument("--h", type=_positive_int, default=30)
    p.add_argument("--w", type=_positive_int, default=54)
    p.add_argument("--drift", type=float, default=0.1)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run())
