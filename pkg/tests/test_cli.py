import csv
import io

import numpy as np
import pytest

from memread import cli
from memread.core import KeySet, ShapeSpec, ValueSet
from memread.costmodel import bench_table
from memread.diagnostics import GridSpec, argmax_labels, contribution_field, coverage_curve, gini
from memread.diagnostics import ContributionRecord
from memread.membank import Architecture, SchedulePolicy, simulate_costs
from memread.readout import memory_affinity, readout_single
from memread.similarity import SimilarityMeasure, pairwise_scores, scale_scores
from memread.synth import outlier_scene, random_matrix
from memread.tensorio import read_tensor, write_tensor


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def keys(tmp_path):
    km = random_matrix(8, 30, 1)
    kq = random_matrix(8, 6, 2)
    write_tensor(tmp_path / "km.stf", km)
    write_tensor(tmp_path / "kq.stf", kq)
    return km, kq


def test_scores_matches_library(tmp_path, keys):
    km, kq = keys
    out = tmp_path / "s.stf"
    assert cli.run(["scores", "--measure", "dot", "--mem", str(tmp_path / "km.stf"),
                    "--query", str(tmp_path / "kq.stf"), "--scale", "--out", str(out)]) == 0
    expect = scale_scores(pairwise_scores(KeySet(km), KeySet(kq), SimilarityMeasure.DOT), 8)
    np.testing.assert_array_equal(read_tensor(out), expect.matrix)


def test_scores_channel_mismatch_is_data_error(tmp_path, capsys):
    write_tensor(tmp_path / "a.stf", random_matrix(8, 5, 0))
    write_tensor(tmp_path / "b.stf", random_matrix(4, 5, 0))
    code = cli.run(["scores", "--mem", str(tmp_path / "a.stf"), "--query", str(tmp_path / "b.stf"),
                    "--out", str(tmp_path / "s.stf")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert cli.run(["bench", "--bogus"]) == 1
    assert cli.run([]) == 1
    assert cli.run(["scores", "--measure", "manhattan", "--mem", "a", "--query", "b", "--out", "c"]) == 1


def test_missing_file_is_data_error(tmp_path):
    assert cli.run(["gini", "--in", str(tmp_path / "missing.stf")]) == 2


def test_readout_matches_library(tmp_path, keys):
    km, kq = keys
    v1, v2 = random_matrix(3, 30, 5), random_matrix(3, 30, 6)
    write_tensor(tmp_path / "v1.stf", v1)
    write_tensor(tmp_path / "v2.stf", v2)
    argv = ["readout", "--mem", str(tmp_path / "km.stf"), "--query", str(tmp_path / "kq.stf"),
            "--topk", "5", "--values", f"{tmp_path / 'v1.stf'},{tmp_path / 'v2.stf'}",
            "--out", f"{tmp_path / 'o1.stf'},{tmp_path / 'o2.stf'}"]
    assert cli.run(argv) == 0
    w = memory_affinity(KeySet(km), KeySet(kq), SimilarityMeasure.L2_DECOMPOSED, topk=5)
    np.testing.assert_array_equal(read_tensor(tmp_path / "o1.stf"), readout_single(ValueSet(v1), w).matrix)
    np.testing.assert_array_equal(read_tensor(tmp_path / "o2.stf"), readout_single(ValueSet(v2), w).matrix)


def test_readout_from_affinity_file(tmp_path):
    write_tensor(tmp_path / "w.stf", np.array([[0.25], [0.75]], np.float32))
    write_tensor(tmp_path / "v.stf", np.array([[4.0, 8.0]], np.float32))
    assert cli.run(["readout", "--affinity", str(tmp_path / "w.stf"), "--values", str(tmp_path / "v.stf"),
                    "--out", str(tmp_path / "o.stf")]) == 0
    np.testing.assert_allclose(read_tensor(tmp_path / "o.stf"), [[7.0]])
    # output count must match value count
    assert cli.run(["readout", "--affinity", str(tmp_path / "w.stf"), "--values", str(tmp_path / "v.stf"),
                    "--out", f"{tmp_path / 'a.stf'},{tmp_path / 'b.stf'}"]) == 1


def test_bench_matches_library(tmp_path):
    out = tmp_path / "b.csv"
    assert cli.run(["bench", "--ck", "64,128", "--out", str(out)]) == 0
    rows = read_csv(out)
    expect = bench_table([64, 128], ShapeSpec())
    assert [int(r["flops"]) for r in rows] == [r["flops"] for r in expect]
    dot = {int(r["ck"]): int(r["flops"]) for r in rows if r["measure"] == "dot"}
    assert dot[128] / dot[64] == 2.0


def test_bench_stdout(capsys):
    assert cli.run(["bench", "--ck", "64", "--measures", "dot"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 1 and rows[0]["measure"] == "dot"


def test_schedule_reference_video(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.run(["schedule", "--frames", "100", "--objects", "2", "--every", "5",
                    "--arch", "stcn", "--out", str(out)]) == 0
    (row,) = read_csv(out)
    assert int(row["value_encoder_calls"]) == 40
    assert int(row["key_encoder_calls"]) == 100
    ref = simulate_costs(100, 2, SchedulePolicy(5), Architecture.STCN)
    assert int(row["affinity_computations"]) == ref.affinity_computations


def test_schedule_both(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.run(["schedule", "--frames", "20", "--objects", "3", "--arch", "both",
                    "--temporary", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 2 and {r["temporary"] for r in rows} == {"1"}


def test_voronoi_and_field(tmp_path):
    pts = np.array([(0, 0), (1, 0), (0.2, 0.9)], np.float32)
    write_tensor(tmp_path / "p.stf", pts)
    grid = "-1,2,-1,2,6"
    assert cli.run(["voronoi", "--points", str(tmp_path / "p.stf"), f"--grid={grid}",
                    "--measure", "dot", "--out", str(tmp_path / "v.csv")]) == 0
    rows = read_csv(tmp_path / "v.csv")
    labels = argmax_labels(pts, GridSpec.parse(grid), SimilarityMeasure.DOT).ravel()
    assert [int(r["label"]) for r in rows] == labels.tolist()
    centers = GridSpec.parse(grid).centers()
    assert [(float(r["x"]), float(r["y"])) for r in rows[:2]] == [tuple(c) for c in centers[:2]]

    assert cli.run(["field", "--points", str(tmp_path / "p.stf"), f"--grid={grid}",
                    "--out", str(tmp_path / "f.csv")]) == 0
    rows = read_csv(tmp_path / "f.csv")
    field = contribution_field(pts, GridSpec.parse(grid), SimilarityMeasure.L2_NAIVE, 1.0)
    assert len(rows) == 3 * 36
    np.testing.assert_allclose([float(r["weight"]) for r in rows[:3]], field[:, 0, 0], rtol=1e-8)


def test_bad_grid_is_usage_error(tmp_path):
    write_tensor(tmp_path / "p.stf", np.zeros((1, 2), np.float32))
    assert cli.run(["voronoi", "--points", str(tmp_path / "p.stf"), "--grid", "0,1,0"]) == 1


def test_gini_and_curve(tmp_path, capsys):
    write_tensor(tmp_path / "m.stf", np.array([0.05, 0.5, 0.9], np.float32))
    assert cli.run(["gini", "--in", str(tmp_path / "m.stf")]) == 0
    value = float(capsys.readouterr().out)
    assert value == pytest.approx(gini(np.array([0.05, 0.5, 0.9], np.float32)), abs=1e-9)
    assert cli.run(["curve", "--in", str(tmp_path / "m.stf"), "--thresholds", "0.01,0.1,0.8",
                    "--out", str(tmp_path / "c.csv")]) == 0
    assert [int(r["count"]) for r in read_csv(tmp_path / "c.csv")] == [3, 2, 1]
    rec = ContributionRecord(np.array([0.05, 0.5, 0.9], np.float32).astype(float))
    assert coverage_curve(rec, [0.01, 0.1, 0.8]).tolist() == [3, 2, 1]


def test_synth_scenes(tmp_path):
    assert cli.run(["synth", "--scene", "outlier", "--seed", "0", "--out", str(tmp_path / "o.stf")]) == 0
    np.testing.assert_array_equal(read_tensor(tmp_path / "o.stf"), outlier_scene(0))
    assert cli.run(["synth", "--scene", "keys", "--seed", "3", "--rows", "4", "--cols", "5",
                    "--out", str(tmp_path / "k.stf")]) == 0
    np.testing.assert_array_equal(read_tensor(tmp_path / "k.stf"), random_matrix(4, 5, 3))
    assert cli.run(["synth", "--scene", "drift", "--seed", "1", "--frames", "3", "--ck", "4",
                    "--h", "2", "--w", "2", "--out", str(tmp_path / "d.stf")]) == 0
    assert read_tensor(tmp_path / "d.stf").shape == (3, 4, 4)
    assert cli.run(["synth", "--scene", "outlier", "--out", str(tmp_path / "x.stf")]) == 1
    assert cli.run(["synth", "--scene", "outlier", "--seed", "-3", "--out", str(tmp_path / "x.stf")]) == 1


def test_rank_three_memory_is_concatenated(tmp_path):
    frames = np.stack([random_matrix(4, 6, s) for s in range(3)])
    write_tensor(tmp_path / "km.stf", frames)
    write_tensor(tmp_path / "kq.stf", random_matrix(4, 6, 9))
    assert cli.run(["scores", "--measure", "dot", "--mem", str(tmp_path / "km.stf"),
                    "--query", str(tmp_path / "kq.stf"), "--out", str(tmp_path / "s.stf")]) == 0
    assert read_tensor(tmp_path / "s.stf").shape == (18, 6)
