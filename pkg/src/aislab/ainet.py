"""aiNet: an immune network that compresses data into a small set of memory
cells, plus cluster extraction from the cells' minimal spanning tree.

Training works in min-max scaled coordinates by default so that the
suppression and death thresholds mean the same thing on every dataset;
:class:`ImmuneNetwork` keeps both the scaled cells and their image in the
original units.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial.distance import cdist

from .clonal import clone_counts

log = logging.getLogger(__name__)


class AiNetError(ValueError):
    pass


@dataclass(frozen=True)
class AiNetParams:
    """``zeta`` and ``r_replace_pct`` are percentages.  ``n_init`` random cells
    seed the network; ``beta`` scales the per-rank clone counts."""

    n: int = 4
    zeta: float = 10.0
    sigma_d: float = 1.0
    sigma_s: float = 0.1
    n_gen: int = 40
    r_replace_pct: float = 0.0
    n_init: int = 20
    beta: float = 1.0
    scale: bool = True

    def __post_init__(self):
        if self.n < 1 or self.n_init < 1:
            raise AiNetError("n and n_init must be >= 1")
        if not 0 < self.zeta <= 100:
            raise AiNetError("zeta must lie in (0, 100]")
        if self.sigma_s < 0 or self.sigma_d <= 0:
            raise AiNetError("need sigma_s >= 0 and sigma_d > 0")
        if not 0 <= self.r_replace_pct <= 100:
            raise AiNetError("r_replace_pct must lie in [0, 100]")
        if self.n_gen < 0 or self.beta <= 0:
            raise AiNetError("n_gen must be >= 0 and beta > 0")


@dataclass
class ImmuneNetwork:
    cells: np.ndarray
    scaled_cells: np.ndarray
    lo: np.ndarray
    span: np.ndarray
    trace: list[int] = field(default_factory=list)
    clones_processed: int = 0
    data_size: int = 0

    @property
    def similarity(self) -> np.ndarray:
        """Pairwise cell distances in the training (scaled) space."""
        return cdist(self.scaled_cells, self.scaled_cells)

    def __len__(self) -> int:
        return self.cells.shape[0]

    @property
    def compression(self) -> float:
        return 1.0 - len(self) / self.data_size if self.data_size else 0.0


def ainet_mutate(cell, antigen, alpha: float) -> np.ndarray:
    """Move ``cell`` a fraction ``alpha`` of the way to ``antigen``."""
    c = np.asarray(cell, dtype=float)
    return c - alpha * (c - np.asarray(antigen, dtype=float))


def suppress(cells: np.ndarray, sigma_s: float) -> np.ndarray:
    """Indices of the cells kept by greedy suppression.

    Walks the cells in order and keeps one only if it lies at least
    ``sigma_s`` from every cell already kept.
    """
    if cells.shape[0] == 0:
        return np.zeros(0, dtype=int)
    kept = [0]
    for i in range(1, cells.shape[0]):
        d = np.sqrt(((cells[kept] - cells[i]) ** 2).sum(axis=1))
        if d.min() >= sigma_s:
            kept.append(i)
    return np.array(kept)


def _scale(X: np.ndarray, enabled: bool):
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0] = 1.0
    if not enabled:
        return X.copy(), np.zeros(X.shape[1]), np.ones(X.shape[1])
    return (X - lo) / span, lo, span


def ainet_train(data, params: AiNetParams, rng: np.random.Generator) -> ImmuneNetwork:
    """Train the network for ``params.n_gen`` iterations.

    Each iteration presents every antigen to the network as it stood at the
    start of the iteration.  The n nearest cells are cloned, the clones move
    toward the antigen by ``alpha = u * d_j / d_max`` (u uniform, d_j the
    parent's distance, d_max the largest selected distance), the closest
    ``zeta`` percent survive, those farther than ``sigma_d`` die, and the rest
    are thinned at ``sigma_s`` before joining the new pool.  The pool is then
    suppressed as a whole and becomes the next network.  Random replacement
    of the worst cells is skipped on the last iteration so the returned
    network always satisfies the suppression bound.
    """
    X = np.atleast_2d(np.asarray(data, dtype=float))
    if X.shape[0] == 0 or X.size == 0:
        raise AiNetError("empty data")
    p = params
    Xs, lo, span = _scale(X, p.scale)
    box_lo, box_hi = Xs.min(axis=0), Xs.max(axis=0)

    def random_cells(count):
        return box_lo + (box_hi - box_lo) * rng.random((count, X.shape[1]))

    M = random_cells(p.n_init)
    trace, processed = [], 0
    for it in range(p.n_gen):
        pool = []
        D = cdist(Xs, M)
        for a, ag in enumerate(Xs):
            sel = np.argsort(D[a], kind="stable")[: p.n]
            d_sel = D[a, sel]
            counts = clone_counts(sel.size, p.beta)
            parents = np.repeat(sel, counts)
            d_max = d_sel.max()
            ratio = np.repeat(d_sel / d_max if d_max > 0 else np.zeros(sel.size), counts)
            alpha = rng.random(parents.size) * ratio
            clones = M[parents] - alpha[:, None] * (M[parents] - ag)
            processed += clones.shape[0]
            dc = np.sqrt(((clones - ag) ** 2).sum(axis=1))
            keep = max(1, math.ceil(p.zeta / 100.0 * clones.shape[0]))
            best = np.argsort(dc, kind="stable")[:keep]
            best = best[dc[best] <= p.sigma_d]
            if best.size:
                mp = clones[best]
                pool.append(mp[suppress(mp, p.sigma_s)])
        if pool:
            P = np.vstack(pool)
            M = P[suppress(P, p.sigma_s)]
        else:
            log.warning("iteration %d: every clone died; keeping the previous network", it)
        if p.r_replace_pct and it < p.n_gen - 1:
            worst_count = int(math.floor(p.r_replace_pct / 100.0 * M.shape[0]))
            if worst_count:
                # worst = farthest from any antigen
                reach = cdist(M, Xs).min(axis=1)
                worst = np.argsort(-reach, kind="stable")[:worst_count]
                M[worst] = random_cells(worst_count)
        trace.append(int(M.shape[0]))
    return ImmuneNetwork(M * span + lo, M.copy(), lo, span, trace, processed, X.shape[0])


def mst_edges(points: np.ndarray) -> np.ndarray:
    """MST edges as rows (i, j, length), sorted by (i, j)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    W = cdist(pts, pts)
    # scipy drops zero-weight entries, so coincident points get a tiny weight
    tiny = np.finfo(float).tiny
    W[(W == 0) & ~np.eye(len(pts), dtype=bool)] = tiny
    T = minimum_spanning_tree(W).tocoo()
    edges = np.array(sorted(zip(np.minimum(T.row, T.col), np.maximum(T.row, T.col), T.data)))
    if edges.size:
        edges[edges[:, 2] == tiny, 2] = 0.0
    return edges.reshape(-1, 3)


def mst_clusters(network, mode="auto") -> np.ndarray:
    """Cluster labels over cells from the Euclidean MST.

    ``mode`` is ``"auto"`` (cut every edge longer than mean + one standard
    deviation) or an integer K (cut the K-1 longest edges).  Labels are
    numbered by first appearance.  A network's scaled cells are used so the
    result matches the training geometry; a raw array is used as given.
    """
    pts = network.scaled_cells if isinstance(network, ImmuneNetwork) else np.atleast_2d(np.asarray(network, dtype=float))
    n = pts.shape[0]
    if n == 0:
        raise AiNetError("no cells")
    if n == 1:
        return np.zeros(1, dtype=int)
    edges = mst_edges(pts)
    if mode == "auto":
        lengths = edges[:, 2]
        keep = lengths <= lengths.mean() + lengths.std()
    else:
        K = int(mode)
        if not 1 <= K <= n:
            raise AiNetError(f"K={K} but the network has {n} cells")
        order = np.argsort(-edges[:, 2], kind="stable")
        keep = np.ones(len(edges), dtype=bool)
        keep[order[: K - 1]] = False
    from scipy.sparse import coo_matrix

    kept = edges[keep]
    G = coo_matrix((np.ones(len(kept)), (kept[:, 0].astype(int), kept[:, 1].astype(int))), shape=(n, n))
    _, raw = connected_components(G, directed=False)
    _, first = np.unique(raw, return_index=True)
    remap = np.empty(raw.max() + 1, dtype=int)
    remap[raw[np.sort(first)]] = np.arange(first.size)
    return remap[raw]
