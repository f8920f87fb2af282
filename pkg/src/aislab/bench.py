"""Seeded experiment harness: repeated runs, summaries, sweeps and tables.

Run ``i`` of an experiment uses seed ``base_seed + i``.  Records are sorted
by seed before anything is written, so the CSV outputs do not depend on how
the runs were scheduled.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import ainet as ainet_mod
from . import clonal, clustering, datasets, negsel
from .shape_space import seeded_rng

log = logging.getLogger(__name__)

ALGORITHMS = ("ucsc", "kmeans", "clonalg", "improved_clonalg", "clonclas", "negsel", "ainet", "opt_clonalg")
REPEAT_TOLERANCE = 0.005


class BenchError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    algorithm: str
    dataset: str
    params: dict[str, Any] = field(default_factory=dict)
    repeats: int = 1
    base_seed: int = 0
    sweep: tuple[str, list] | None = None
    outputs: Path | None = None
    missing_policy: str = "impute_mean"
    data_seed: int = 0
    workers: int = 1
    figures: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise BenchError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if self.repeats < 1:
            raise BenchError("repeats must be >= 1")
        if self.sweep is not None and not self.sweep[1]:
            raise BenchError(f"sweep over {self.sweep[0]!r} has no values")
        if self.outputs is not None:
            self.outputs = Path(self.outputs)


@dataclass
class RunRecord:
    seed: int
    generations_used: int
    best_score: float
    accuracy: float | None
    wall_time: float
    trace: list[float] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict, repr=False)


@dataclass
class Summary:
    algorithm: str
    dataset: str
    repeats: int
    base_seed: int
    objective: str
    best: float
    mean: float
    std: float
    repeat_rate: float
    best_seed: int
    best_accuracy: float | None
    mean_generations: float
    params: dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _build(cls, params: dict[str, Any], **fixed):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(params) - names
    if unknown:
        raise BenchError(f"unknown parameter(s) for {cls.__name__}: {', '.join(sorted(unknown))}")
    try:
        return cls(**{**fixed, **params})
    except (TypeError, ValueError) as exc:
        raise BenchError(str(exc)) from None


def _split(params: dict, keys: tuple[str, ...]) -> tuple[dict, dict]:
    own = {k: v for k, v in params.items() if k in keys}
    return own, {k: v for k, v in params.items() if k not in keys}


# --- algorithm adapters --------------------------------------------------
# Each adapter validates its inputs once and returns a callable seed -> RunRecord.


def _labelled(cfg: ExperimentConfig) -> datasets.LabeledDataset:
    try:
        return datasets.load_dataset(cfg.dataset, seeded_rng(cfg.data_seed), cfg.missing_policy)
    except datasets.DatasetError as exc:
        raise BenchError(str(exc)) from None


def _prepare_ucsc(cfg):
    ds = _labelled(cfg)
    params = _build(clustering.UcscParams, cfg.params, **({} if "K" in cfg.params else {"K": ds.n_classes}))

    def run(seed):
        res = clustering.ucsc_cluster(ds.points, params, seeded_rng(seed))
        acc = clustering.align_accuracy(res.solution.labels, ds.labels, params.K)
        trace = [1.0 / a if a > 0 else math.inf for a in res.trace]
        return RunRecord(seed, params.gen, res.D, acc.overall, 0.0, trace,
                         {"labels": res.solution.labels, "report": acc, "centers": res.solution.refined_centroids})

    return ds, "min", run


def _prepare_kmeans(cfg):
    ds = _labelled(cfg)
    own, rest = _split(cfg.params, ("K", "max_iter"))
    if rest:
        raise BenchError(f"unknown parameter(s) for kmeans: {', '.join(sorted(rest))}")
    K, max_iter = int(own.get("K", ds.n_classes)), int(own.get("max_iter", 300))

    def run(seed):
        res = clustering.kmeans(ds.points, K, seeded_rng(seed), max_iter=max_iter)
        acc = clustering.align_accuracy(res.labels, ds.labels, K)
        return RunRecord(seed, res.iterations, res.D, acc.overall, 0.0, res.e2_history,
                         {"labels": res.labels, "report": acc, "centers": res.centers})

    return ds, "min", run


def _glyphs(cfg):
    if cfg.dataset in ("digits", "glyphs"):
        return datasets.digit_glyphs(with_labels=True)
    if Path(cfg.dataset).is_file():
        return datasets.digit_glyphs(cfg.dataset, with_labels=True)
    raise BenchError(f"unknown glyph set {cfg.dataset!r}; use 'digits' or a bitmap file")


def _prepare_clonal(cfg, train):
    glyphs, _ = _glyphs(cfg)
    params = _build(clonal.ClonalParams, cfg.params)

    def run(seed):
        res = train(glyphs, params, seeded_rng(seed))
        return RunRecord(seed, res.generations, float(res.normalized.mean()), None, 0.0, res.trace,
                         {"converged": res.converged})

    return None, "max", run


def _prepare_clonclas(cfg):
    glyphs, labels = _glyphs(cfg)
    own, rest = _split(cfg.params, ("exemplars", "noise"))
    params = _build(clonal.ClonalParams, rest)
    E, noise = int(own.get("exemplars", 3)), float(own.get("noise", 0.05))

    def run(seed):
        rng = seeded_rng(seed)
        classes = []
        for lab, g in zip(labels, glyphs):
            ex = [g]
            for _ in range(E - 1):
                ex.append(g ^ (rng.random(g.size) < noise).astype(np.uint8))
            classes.append((lab, ex))
        mem = clonal.clonclas_train(classes, params, rng)
        hits = [clonal.classify(x, mem, 0.0) == lab for lab, ex in classes for x in ex]
        score = float(np.mean(mem.affinities / (E * glyphs[0].size)))
        return RunRecord(seed, max(mem.generations), score, 100.0 * float(np.mean(hits)), 0.0,
                         [float(a) for a in mem.affinities])

    return None, "max", run


OBJECTIVES: dict[str, tuple[Callable[[np.ndarray], float], float, float]] = {
    "parabola": (lambda z: -(z[0] - 3.0) ** 2, 0.0, 10.0),
    "sinz": (lambda z: math.sin(z[0]) * z[0], 0.0, 10.0),
}


def _prepare_opt(cfg):
    if cfg.dataset not in OBJECTIVES:
        raise BenchError(f"unknown objective {cfg.dataset!r}; choose from {', '.join(OBJECTIVES)}")
    fn, lo, hi = OBJECTIVES[cfg.dataset]
    own, rest = _split(cfg.params, ("bits",))
    problem = clonal.OptProblem(fn, (lo,), (hi,), int(own.get("bits", 16)))
    params = _build(clonal.ClonalParams, {"N": 20, "n": 10, "beta": 2, "rho": 2, "d": 2, "gen": 100, **rest})

    def run(seed):
        res = clonal.opt_clonalg(problem, params, seeded_rng(seed))
        return RunRecord(seed, params.gen, res.score, None, 0.0, res.trace, {"z": res.z.tolist()})

    return None, "max", run


def load_series(name: str) -> tuple[np.ndarray, int]:
    """A 1-D series plus the end of its training segment."""
    if name == "step_change":
        return negsel.step_change_series()
    if not Path(name).is_file():
        raise BenchError(f"unknown series {name!r}; use 'step_change' or a CSV file")
    with open(name, newline="") as fh:
        values = []
        for row in csv.reader(fh):
            for cell in row:
                try:
                    values.append(float(cell))
                except ValueError:
                    continue
    if not values:
        raise BenchError(f"{name}: no numeric values")
    x = np.array(values)
    return x, x.size // 2


NEGSEL_KEYS = ("window", "stride", "threshold", "detectors", "train", "max_attempts")


def _prepare_negsel(cfg):
    series, change = load_series(cfg.dataset)
    own, rest = _split(cfg.params, NEGSEL_KEYS)
    if rest:
        raise BenchError(f"unknown parameter(s) for negsel: {', '.join(sorted(rest))}")
    window, stride = int(own.get("window", 4)), int(own.get("stride", 1))
    thr, count = float(own.get("threshold", 0.4)), int(own.get("detectors", 500))
    train = int(own.get("train", change))
    try:
        self_set = negsel.window_encode(series[:train], window, stride)
        probes = negsel.window_encode(series, window, stride)
    except negsel.NegSelError as exc:
        raise BenchError(str(exc)) from None

    def run(seed):
        ds = negsel.generate_detectors(self_set, count, thr, seeded_rng(seed),
                                       max_attempts=int(own.get("max_attempts", 100_000)))
        counts = negsel.monitor(ds, probes)
        return RunRecord(seed, ds.attempts, float((counts > 0).sum()), None, 0.0,
                         [float(c) for c in counts], {"counts": counts, "train": train, "window": window})

    return None, "max", run


def _prepare_ainet(cfg):
    ds = _labelled(cfg)
    own, rest = _split(cfg.params, ("K",))
    params = _build(ainet_mod.AiNetParams, rest)
    mode = own.get("K", "auto")

    def run(seed):
        net = ainet_mod.ainet_train(ds.points, params, seeded_rng(seed))
        labels = ainet_mod.mst_clusters(net, mode)
        return RunRecord(seed, params.n_gen, net.compression, None, 0.0, [float(t) for t in net.trace],
                         {"network": net, "clusters": labels})

    return ds, "max", run


PREPARE = {
    "ucsc": _prepare_ucsc,
    "kmeans": _prepare_kmeans,
    "clonalg": lambda cfg: _prepare_clonal(cfg, clonal.clonalg_train),
    "improved_clonalg": lambda cfg: _prepare_clonal(cfg, clonal.improved_clonalg_train),
    "clonclas": _prepare_clonclas,
    "opt_clonalg": _prepare_opt,
    "negsel": _prepare_negsel,
    "ainet": _prepare_ainet,
}


# --- experiments ---------------------------------------------------------


def repeat_rate(scores, tolerance: float = REPEAT_TOLERANCE, objective: str = "min") -> float:
    """Fraction of runs whose score lies within ``tolerance`` (relative) of the best."""
    s = np.asarray(scores, dtype=float)
    best = s.min() if objective == "min" else s.max()
    return float((np.abs(s - best) <= tolerance * abs(best)).mean())


def summarize(cfg: ExperimentConfig, records: list[RunRecord], objective: str) -> Summary:
    scores = [r.best_score for r in records]
    sign = 1.0 if objective == "min" else -1.0
    # best score first, lowest seed on ties
    best_rec = min(records, key=lambda r: (sign * r.best_score, r.seed))
    return Summary(
        algorithm=cfg.algorithm,
        dataset=cfg.dataset,
        repeats=len(records),
        base_seed=cfg.base_seed,
        objective=objective,
        best=float(best_rec.best_score),
        mean=float(statistics.fmean(scores)),
        std=float(statistics.pstdev(scores)),
        repeat_rate=repeat_rate(scores, objective=objective),
        best_seed=best_rec.seed,
        best_accuracy=best_rec.accuracy,
        mean_generations=float(statistics.fmean(r.generations_used for r in records)),
        params=dict(cfg.params),
    )


def execute(cfg: ExperimentConfig) -> tuple[datasets.LabeledDataset | None, str, list[RunRecord]]:
    """Run every repeat and return (dataset, objective, records sorted by seed)."""
    ds, objective, run = PREPARE[cfg.algorithm](cfg)

    def timed(seed):
        t0 = time.perf_counter()
        rec = run(seed)
        rec.wall_time = time.perf_counter() - t0
        return rec

    seeds = [cfg.base_seed + i for i in range(cfg.repeats)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(timed, seeds))
    else:
        records = [timed(s) for s in seeds]
    return ds, objective, sorted(records, key=lambda r: r.seed)


def run_experiment(cfg: ExperimentConfig) -> tuple[Summary, list[RunRecord]]:
    ds, objective, records = execute(cfg)
    summary = summarize(cfg, records, objective)
    if cfg.outputs is not None:
        write_outputs(cfg, summary, records, ds)
    return summary, records


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_outputs(cfg: ExperimentConfig, summary: Summary, records: list[RunRecord], ds) -> None:
    out = cfg.outputs
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(summary.to_json() + "\n")
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "generations_used", "best_score", "accuracy", "wall_time"])
        for r in records:
            w.writerow([r.seed, r.generations_used, _fmt(float(r.best_score)), _fmt(r.accuracy), f"{r.wall_time:.6f}"])
    for r in records:
        with open(out / f"trace_{r.seed}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["generation", "value"])
            for g, v in enumerate(r.trace, start=1):
                w.writerow([g, _fmt(float(v))])
    if cfg.algorithm in ("ucsc", "kmeans") and ds is not None:
        emit_tables(summary, records, ds, out)
    if cfg.algorithm == "ainet":
        best = next(r for r in records if r.seed == summary.best_seed)
        write_network(best.extra["network"], best.extra["clusters"], out)
    if cfg.figures:
        from . import plotting

        plotting.experiment_figures(cfg, summary, records, ds, out)


def write_network(net, clusters, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "cells.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(net.cells.shape[1])] + ["cluster"])
        for c, k in zip(net.cells, clusters):
            w.writerow([_fmt(float(v)) for v in c] + [int(k)])
    with open(out / "clusters.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell", "cluster"])
        for i, k in enumerate(clusters):
            w.writerow([i, int(k)])
    report = {"cells": len(net), "data": net.data_size, "compression": net.compression,
              "clusters": int(np.unique(clusters).size), "trace": net.trace}
    (out / "compression.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def emit_tables(summary: Summary, records: list[RunRecord], ds: datasets.LabeledDataset, out: Path | None = None):
    """Accuracy and criterion tables for the best run.

    Returns ``(accuracy_rows, criterion_rows, text)``; with ``out`` set the
    rows are also written to ``table_accuracy.csv`` / ``table_criterion.csv``
    and the aligned text to ``tables.txt``.
    """
    if ds is None or ds.labels.size == 0:
        raise BenchError("tables need a labelled dataset")
    best = next(r for r in records if r.seed == summary.best_seed)
    report = best.extra.get("report")
    if report is None:
        raise BenchError("best run carries no label assignment")
    names = ds.class_names or [f"class{c}" for c in range(len(report.per_class))]
    acc_rows = [["class", "accuracy_pct"]]
    acc_rows += [[n, f"{a:.2f}"] for n, a in zip(names, report.per_class)]
    acc_rows.append(["Overall", f"{report.overall:.2f}"])
    crit_rows = [["algorithm", "dataset", "best_D", "mean_D", "std_D", "repeat_rate_pct", "runs"],
                 [summary.algorithm, summary.dataset, f"{summary.best:.3f}", f"{summary.mean:.3f}",
                  f"{summary.std:.3f}", f"{100 * summary.repeat_rate:.0f}", str(summary.repeats)]]
    text = _aligned(acc_rows) + "\n" + _aligned(crit_rows)
    if out is not None:
        for name, rows in (("table_accuracy.csv", acc_rows), ("table_criterion.csv", crit_rows)):
            with open(out / name, "w", newline="") as fh:
                csv.writer(fh, lineterminator="\n").writerows(rows)
        (out / "tables.txt").write_text(text)
    return acc_rows, crit_rows, text


def _aligned(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for j, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


@dataclass
class SweepRow:
    value: Any
    mean: float
    median: float
    runs: int


def run_sweep(cfg: ExperimentConfig, metric: str = "generations") -> list[SweepRow]:
    """Aggregate ``metric`` (``generations`` or ``score``) over the repeats at each sweep value."""
    if cfg.sweep is None:
        raise BenchError("run_sweep needs a sweep (name, values)")
    if metric not in ("generations", "score"):
        raise BenchError(f"unknown sweep metric {metric!r}")
    name, values = cfg.sweep
    rows = []
    for v in values:
        sub = dataclasses.replace(cfg, params={**cfg.params, name: v}, sweep=None, outputs=None)
        _, _, records = execute(sub)
        vals = [r.generations_used if metric == "generations" else r.best_score for r in records]
        rows.append(SweepRow(v, float(statistics.fmean(vals)), float(statistics.median(vals)), len(vals)))
    if cfg.outputs is not None:
        out = cfg.outputs
        out.mkdir(parents=True, exist_ok=True)
        label = "generations" if metric == "generations" else "score"
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([name, f"mean_{label}"])
            for r in rows:
                w.writerow([r.value, _fmt(r.mean)])
        with open(out / "sweep_median.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([name, f"median_{label}"])
            for r in rows:
                w.writerow([r.value, _fmt(r.median)])
        if cfg.figures:
            from . import plotting

            plotting.sweep_figure(name, label, rows, out / "sweep.png")
    return rows
