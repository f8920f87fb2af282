import csv
import json
import statistics

import numpy as np
import pytest

from aislab.bench import (
    BenchError,
    ExperimentConfig,
    emit_tables,
    execute,
    repeat_rate,
    run_experiment,
    run_sweep,
    summarize,
)

from _runs import records


def _read_runs(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_single_repeat_summary():
    s, recs = run_experiment(ExperimentConfig("ucsc", "iris", repeats=1, base_seed=7))
    assert s.best == s.mean == recs[0].best_score
    assert s.std == 0.0 and s.repeat_rate == 1.0 and s.best_seed == 7


def test_repeat_rate_cases():
    assert repeat_rate([10.0, 10.04, 11.0]) == pytest.approx(2 / 3)
    assert repeat_rate([1.0, 0.996, 0.5], objective="max") == pytest.approx(2 / 3)
    assert repeat_rate([3.0]) == 1.0


def test_reruns_are_byte_identical(tmp_path):
    def files(out):
        cfg = ExperimentConfig("kmeans", "dataset1", repeats=5, base_seed=3, outputs=out, figures=False)
        run_experiment(cfg)
        return {p.name: p.read_text() for p in sorted(out.iterdir()) if p.name != "runs.csv"}, _read_runs(out / "runs.csv")

    a, ra = files(tmp_path / "a")
    b, rb = files(tmp_path / "b")
    assert a == b
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_time"} for r in rows]  # noqa: E731
    assert strip(ra) == strip(rb)


def test_parallel_repeats_match_serial(tmp_path):
    serial = execute(ExperimentConfig("ucsc", "iris", repeats=4, workers=1))[2]
    parallel = execute(ExperimentConfig("ucsc", "iris", repeats=4, workers=3))[2]
    assert [r.best_score for r in serial] == [r.best_score for r in parallel]
    assert [r.seed for r in parallel] == [0, 1, 2, 3]


def test_summary_recomputable_from_runs_csv(tmp_path):
    cfg = ExperimentConfig("ucsc", "dataset3", repeats=4, outputs=tmp_path, figures=False)
    run_experiment(cfg)
    summary = json.loads((tmp_path / "summary.json").read_text())
    scores = [float(r["best_score"]) for r in _read_runs(tmp_path / "runs.csv")]
    assert summary["mean"] == statistics.fmean(scores)
    assert summary["std"] == statistics.pstdev(scores)
    assert summary["best"] == min(scores)
    for r in _read_runs(tmp_path / "runs.csv"):
        with open(tmp_path / f"trace_{r['seed']}.csv", newline="") as fh:
            trace = [float(row["value"]) for row in csv.DictReader(fh)]
        assert len(trace) == 20 and trace[-1] == pytest.approx(float(r["best_score"]))


@pytest.mark.parametrize("kw", [dict(algorithm="bogus", dataset="iris"), dict(algorithm="ucsc", dataset="bogus"),
                                dict(algorithm="ucsc", dataset="iris", params={"nope": 1}),
                                dict(algorithm="ucsc", dataset="iris", repeats=0),
                                dict(algorithm="clonalg", dataset="iris"),
                                dict(algorithm="opt_clonalg", dataset="iris")])
def test_bad_configs_fail_before_running(kw, tmp_path):
    with pytest.raises(BenchError):
        run_experiment(ExperimentConfig(outputs=tmp_path / "o", **kw))
    assert not (tmp_path / "o").exists()


def test_one_value_sweep_equals_experiment_mean():
    cfg = ExperimentConfig("clonalg", "digits", {"beta": 10}, repeats=4)
    s, _ = run_experiment(cfg)
    rows = run_sweep(ExperimentConfig("clonalg", "digits", {}, repeats=4, sweep=("beta", [10])), "score")
    assert rows[0].mean == s.mean
    rows = run_sweep(ExperimentConfig("clonalg", "digits", {}, repeats=4, sweep=("beta", [10])))
    assert rows[0].mean == s.mean_generations


def test_beta_sweep_mean_non_increasing(tmp_path):
    cfg = ExperimentConfig("clonalg", "digits", {}, repeats=10, sweep=("beta", [5, 10, 15, 20]), outputs=tmp_path)
    rows = run_sweep(cfg)
    means = [r.mean for r in rows]
    assert all(a >= b for a, b in zip(means, means[1:]))
    with open(tmp_path / "sweep.csv", newline="") as fh:
        assert [float(r["mean_generations"]) for r in csv.DictReader(fh)] == means
    assert (tmp_path / "sweep.png").stat().st_size > 0


def test_rho_sweep_has_interior_peak():
    cfg = ExperimentConfig("clonalg", "digits", {"gen": 50}, repeats=10, sweep=("rho", [2, 4, 4.8, 6, 8]))
    means = [r.mean for r in run_sweep(cfg, "score")]
    peak = int(np.argmax(means))
    assert 0 < peak < len(means) - 1


def test_sweep_errors():
    with pytest.raises(BenchError):
        run_sweep(ExperimentConfig("clonalg", "digits"))
    with pytest.raises(BenchError):
        run_sweep(ExperimentConfig("clonalg", "digits", sweep=("beta", [10])), metric="speed")
    with pytest.raises(BenchError):
        ExperimentConfig("clonalg", "digits", sweep=("beta", []))


GOLDEN_TABLES = """\
class       accuracy_pct
----------  ------------
Setosa            100.00
Versicolor         96.00
Virginica          74.00
Overall            90.00

algorithm  dataset  best_D  mean_D  std_D  repeat_rate_pct  runs
---------  -------  ------  ------  -----  ---------------  ----
ucsc          iris  97.101  97.101  0.000              100     3
"""


def test_tables_golden(tmp_path):
    cfg = ExperimentConfig("ucsc", "iris", repeats=3, outputs=tmp_path, figures=False)
    run_experiment(cfg)
    assert (tmp_path / "tables.txt").read_text() == GOLDEN_TABLES
    with open(tmp_path / "table_accuracy.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["class", "accuracy_pct"] and rows[-1] == ["Overall", "90.00"]


def test_tables_need_labels():
    cfg = ExperimentConfig("clonalg", "digits", {"gen": 5})
    ds, objective, recs = execute(cfg)
    with pytest.raises(BenchError):
        emit_tables(summarize(cfg, recs, objective), recs, ds)


def test_kmeans_dataset2_unreliable():
    assert repeat_rate([r.best_score for r in records("kmeans", "dataset2")]) < 0.8


def test_figures_written(tmp_path):
    run_experiment(ExperimentConfig("ucsc", "dataset1", repeats=2, outputs=tmp_path / "u"))
    run_experiment(ExperimentConfig("ainet", "concentric_circles", {"n_gen": 5, "K": 2}, outputs=tmp_path / "a"))
    run_experiment(ExperimentConfig("negsel", "step_change", {"detectors": 50}, outputs=tmp_path / "n"))
    for path in ("u/traces.png", "u/clusters.png", "a/network.png", "a/cells.csv", "a/clusters.csv",
                 "a/compression.json", "n/activations.png"):
        assert (tmp_path / path).stat().st_size > 0, path
    report = json.loads((tmp_path / "a/compression.json").read_text())
    assert report["clusters"] == 2 and report["data"] == 630


def test_other_adapters_run():
    s, _ = run_experiment(ExperimentConfig("opt_clonalg", "parabola", repeats=2))
    assert s.best == pytest.approx(0.0, abs=1e-3)
    s, recs = run_experiment(ExperimentConfig("clonclas", "digits", {"gen": 40}))
    assert recs[0].accuracy == 100.0
    s, _ = run_experiment(ExperimentConfig("improved_clonalg", "digits", {"k": 1}, repeats=2))
    assert s.best == pytest.approx(1.0)


def test_negsel_series_from_csv(tmp_path):
    t = np.arange(600)
    x = np.where(t < 300, np.sin(2 * np.pi * t / 20), np.sin(2 * np.pi * t / 6))
    path = tmp_path / "s.csv"
    path.write_text("value\n" + "\n".join(repr(float(v)) for v in x) + "\n")
    s, recs = run_experiment(ExperimentConfig("negsel", str(path), {"detectors": 500, "threshold": 0.4}))
    counts = recs[0].extra["counts"]
    assert counts[: 300 - 3].sum() == 0 and counts[300:].sum() > 0
