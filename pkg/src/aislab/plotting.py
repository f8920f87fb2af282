"""PNG figures written next to the CSV outputs (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

TRACE_LABELS = {
    "ucsc": "best D",
    "kmeans": "squared error",
    "clonalg": "mean memory affinity",
    "improved_clonalg": "mean memory affinity",
    "opt_clonalg": "best objective",
    "ainet": "network size",
}


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def trace_figure(records, best_seed: int, ylabel: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for r in records:
        if r.seed != best_seed and r.trace:
            ax.plot(range(1, len(r.trace) + 1), r.trace, color="0.75", lw=0.7)
    best = next(r for r in records if r.seed == best_seed)
    if best.trace:
        ax.plot(range(1, len(best.trace) + 1), best.trace, color="C3", lw=1.8, label=f"seed {best_seed}")
        ax.legend()
    ax.set_xlabel("generation")
    ax.set_ylabel(ylabel)
    _save(fig, path)


def cluster_figure(points: np.ndarray, labels: np.ndarray, centers, title: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(points[:, 0], points[:, 1], c=labels, cmap="tab10", s=12)
    if centers is not None:
        c = np.asarray(centers)
        ax.scatter(c[:, 0], c[:, 1], marker="x", c="k", s=60)
    ax.set_title(title)
    _save(fig, path)


def network_figure(points: np.ndarray, net, clusters, path: Path) -> None:
    from .ainet import mst_edges

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(points[:, 0], points[:, 1], s=4, color="0.7")
    cells = net.cells
    for i, j, _ in mst_edges(net.scaled_cells):
        i, j = int(i), int(j)
        if clusters[i] == clusters[j]:
            ax.plot(cells[[i, j], 0], cells[[i, j], 1], color="0.3", lw=0.8)
    ax.scatter(cells[:, 0], cells[:, 1], c=clusters, cmap="tab10", s=25, zorder=3)
    ax.set_title(f"{len(net)} cells, compression {100 * net.compression:.1f}%")
    _save(fig, path)


def activation_figure(series: np.ndarray, counts: np.ndarray, train: int, window: int, path: Path) -> None:
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 4.5), sharex=True)
    top.plot(series, lw=0.8)
    top.axvline(train, color="C3", ls="--")
    top.set_ylabel("signal")
    bottom.bar(np.arange(len(counts)) + window - 1, counts, width=1.0, color="C1")
    bottom.set_ylabel("active detectors")
    bottom.set_xlabel("sample")
    _save(fig, path)


def sweep_figure(name: str, metric: str, rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    xs = [float(r.value) for r in rows]
    ax.plot(xs, [r.mean for r in rows], "o-", label="mean")
    ax.plot(xs, [r.median for r in rows], "s--", label="median")
    ax.set_xlabel(name)
    ax.set_ylabel(metric)
    ax.legend()
    _save(fig, path)


def experiment_figures(cfg, summary, records, ds, out: Path) -> None:
    """Figures suited to the algorithm; silently skips what does not apply."""
    out = Path(out)
    if cfg.algorithm in TRACE_LABELS:
        trace_figure(records, summary.best_seed, TRACE_LABELS[cfg.algorithm], out / "traces.png")
    best = next(r for r in records if r.seed == summary.best_seed)
    if cfg.algorithm in ("ucsc", "kmeans") and ds is not None and ds.dims >= 2:
        cluster_figure(ds.points, best.extra["labels"], best.extra.get("centers"),
                       f"{cfg.algorithm} on {cfg.dataset}: D = {summary.best:.3f}", out / "clusters.png")
    if cfg.algorithm == "ainet" and ds is not None and ds.dims >= 2:
        network_figure(ds.points, best.extra["network"], best.extra["clusters"], out / "network.png")
    if cfg.algorithm == "negsel":
        from .bench import load_series

        series, _ = load_series(cfg.dataset)
        activation_figure(series, best.extra["counts"], best.extra["train"], best.extra["window"],
                          out / "activations.png")
