"""Clonal selection: CLONALG, Improved CLONALG, CLONCLAS, partitioned CLONALG
and opt-CLONALG over binary shape-space.

Affinity between an antibody and an antigen is their Hamming distance
(complementarity); a memory cell reaches full affinity L when it is the
bitwise complement of its antigen.

The repertoire is an ``(N, L)`` uint8 array whose first ``m`` rows are the
memory cells (one per antigen or class) and whose remaining ``r = N - m`` rows
are the remainder set.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from .shape_space import ShapeSpaceError, binary_vector, seeded_rng

log = logging.getLogger(__name__)


class ClonalError(ValueError):
    pass


@dataclass(frozen=True)
class ClonalParams:
    """Knobs shared by the clonal-selection family.

    ``clone_pool`` picks the numerator of the clone-count rule: ``"selected"``
    uses the number of cells actually selected (``n``), ``"population"`` uses
    ``N``.  ``replace_scope`` says whether the ``d`` random replacements
    happen after every antigen or once per generation.
    """

    N: int = 10
    n: int = 3
    beta: float = 10.0
    d: int = 0
    k: int = 0
    rho: float = 4.8
    gen: int = 500
    epsilon: float = 1.0
    clone_pool: str = "selected"
    replace_scope: str = "antigen"

    def __post_init__(self):
        if self.N < 1 or self.n < 1:
            raise ClonalError("N and n must be >= 1")
        if self.n > self.N or self.d > self.N or self.k > self.N:
            raise ClonalError("n, d and k must not exceed N")
        if self.d < 0 or self.k < 0 or self.gen < 0:
            raise ClonalError("d, k and gen must be non-negative")
        if self.beta <= 0 or self.rho <= 0:
            raise ClonalError("beta and rho must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ClonalError("epsilon is a fraction of the maximum affinity")
        if self.clone_pool not in ("selected", "population"):
            raise ClonalError(f"unknown clone_pool {self.clone_pool!r}")
        if self.replace_scope not in ("antigen", "generation"):
            raise ClonalError(f"unknown replace_scope {self.replace_scope!r}")

    def pool_size(self) -> int:
        return self.n if self.clone_pool == "selected" else self.N


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def clone_counts(pop_size: int, beta: float) -> list[int]:
    """Clones per rank: ``round(beta * pop_size / i)`` for i = 1..pop_size.

    Halves round away from zero and every count is at least 1.
    """
    if pop_size < 1 or beta <= 0:
        raise ClonalError("pop_size must be >= 1 and beta > 0")
    return [max(1, _round_half_up(beta * pop_size / i)) for i in range(1, pop_size + 1)]


def total_clones(pop_size: int, beta: float) -> int:
    return sum(clone_counts(pop_size, beta))


def mutation_rate(f_norm: float, rho: float) -> float:
    """Per-bit flip probability ``exp(-rho * f_norm)``."""
    return math.exp(-rho * f_norm)


def multipoint_mutate(bits, rate: float, rng: np.random.Generator) -> np.ndarray:
    bits = binary_vector(bits)
    flips = rng.random(bits.shape) < rate
    return bits ^ flips.astype(np.uint8)


def _mutate_rows(rows: np.ndarray, rates: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    flips = rng.random(rows.shape) < rates[:, None]
    return rows ^ flips.astype(np.uint8)


def _hamming_rows(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.count_nonzero(A != v, axis=1)


def _as_bit_matrix(patterns, what: str = "antigen") -> np.ndarray:
    rows = [binary_vector(p) for p in patterns]
    if not rows:
        raise ClonalError(f"empty {what} set")
    L = rows[0].size
    if any(r.size != L for r in rows):
        raise ShapeSpaceError(f"{what}s do not share one length")
    return np.vstack(rows)


def _top(scores: np.ndarray, count: int) -> np.ndarray:
    # stable: earlier index wins ties
    return np.argsort(-scores, kind="stable")[:count]


def _bottom(scores: np.ndarray, count: int) -> np.ndarray:
    return np.argsort(scores, kind="stable")[:count]


@dataclass
class ClonalResult:
    memory: np.ndarray
    trace: list[float]
    generations: int
    converged: bool
    history: np.ndarray
    affinities: np.ndarray
    clones_evaluated: int = 0

    @property
    def normalized(self) -> np.ndarray:
        return self.affinities / self.memory.shape[1]


class _Repertoire:
    """Mutable working state for one training call."""

    def __init__(self, m: int, L: int, params: ClonalParams, rng: np.random.Generator):
        if params.N < m:
            raise ClonalError(f"population N={params.N} cannot hold {m} memory cells")
        self.m, self.L, self.p, self.rng = m, L, params, rng
        self.ab = rng.integers(0, 2, size=(params.N, L), dtype=np.uint8)
        self.counts = np.array(clone_counts(params.pool_size(), params.beta)[: params.n])
        self.clones_evaluated = 0

    @property
    def r(self) -> int:
        return self.p.N - self.m

    def step(self, i: int, score: Callable[[np.ndarray], np.ndarray], max_score: float,
             remainder: str | None = None) -> None:
        """One clonal response of memory cell ``i`` to its antigen/class.

        ``remainder`` selects what happens to Ab_r afterwards: None (plain
        CLONALG), ``"k"`` (k worst replaced by k best mutants) or ``"all"``
        (Ab_r replaced by the best r mutants).
        """
        p, ab = self.p, self.ab
        f = score(ab)
        sel = _top(f, p.n)
        counts = self.counts[: sel.size]
        parents = np.repeat(ab[sel], counts, axis=0)
        rates = np.repeat(np.exp(-p.rho * f[sel] / max_score), counts)
        mutants = _mutate_rows(parents, rates, self.rng)
        fm = score(mutants)
        self.clones_evaluated += mutants.shape[0]
        order = _top(fm, mutants.shape[0])
        if fm[order[0]] > f[i]:
            ab[i] = mutants[order[0]]
        r = self.r
        if r and remainder == "k" and p.k:
            kk = min(p.k, r, mutants.shape[0])
            worst = self.m + _bottom(f[self.m:], kk)
            ab[worst] = mutants[order[:kk]]
        elif r and remainder == "all":
            kk = min(r, mutants.shape[0])
            worst = self.m + _bottom(f[self.m:], kk)
            ab[worst] = mutants[order[:kk]]
        if p.replace_scope == "antigen":
            self.inject_random(score)

    def inject_random(self, score) -> None:
        dd = min(self.p.d, self.r)
        if not dd:
            return
        worst = self.m + _bottom(score(self.ab[self.m:]), dd)
        self.ab[worst] = self.rng.integers(0, 2, size=(dd, self.L), dtype=np.uint8)


def clonalg_train(antigens, params: ClonalParams, rng: np.random.Generator) -> ClonalResult:
    """Train one memory cell per antigen, generations outermost.

    Stops early once every memory cell's normalised affinity reaches
    ``params.epsilon``.  ``trace[g]`` is the mean normalised memory affinity
    after generation ``g + 1``.
    """
    Ag = _as_bit_matrix(antigens)
    m, L = Ag.shape
    rep = _Repertoire(m, L, params, rng)
    scorers = [lambda A, a=a: _hamming_rows(A, a) for a in Ag]

    def memory_aff():
        return np.count_nonzero(rep.ab[:m] != Ag, axis=1)

    trace: list[float] = []
    history = [memory_aff()]
    g = 0
    converged = bool((history[0] / L >= params.epsilon).all()) and params.gen == 0
    while g < params.gen:
        g += 1
        for i in range(m):
            rep.step(i, scorers[i], L)
        if params.replace_scope == "generation":
            rep.inject_random(lambda A: np.max([_hamming_rows(A, a) for a in Ag], axis=0))
        aff = memory_aff()
        history.append(aff)
        trace.append(float(aff.mean() / L))
        if (aff / L >= params.epsilon).all():
            converged = True
            break
    aff = history[-1]
    return ClonalResult(rep.ab[:m].copy(), trace, g, converged, np.vstack(history), aff,
                        rep.clones_evaluated)


def improved_clonalg_train(antigens, params: ClonalParams, rng: np.random.Generator) -> ClonalResult:
    """CLONCLAS-ordered training with k-replacement of the remainder set.

    Antigens are outermost; each antigen evolves until its memory cell reaches
    ``epsilon`` or ``gen`` generations pass.  After every clonal response the
    k worst members of Ab_r are overwritten by the k best mutants, so good
    clones keep competing for selection in the next generation.

    ``generations`` is the largest per-antigen generation count and
    ``trace[g]`` the mean normalised memory affinity once every antigen has
    had ``g + 1`` generations (antigens that already converged hold their
    final value).
    """
    Ag = _as_bit_matrix(antigens)
    m, L = Ag.shape
    rep = _Repertoire(m, L, params, rng)
    curves: list[list[int]] = []
    converged = True
    for i in range(m):
        score = lambda A, a=Ag[i]: _hamming_rows(A, a)
        curve = [int(score(rep.ab[i : i + 1])[0])]
        while len(curve) - 1 < params.gen and curve[-1] / L < params.epsilon:
            rep.step(i, score, L, remainder="k")
            if params.replace_scope == "generation":
                rep.inject_random(score)
            curve.append(int(score(rep.ab[i : i + 1])[0]))
        converged &= curve[-1] / L >= params.epsilon
        curves.append(curve)
    g_used = max(len(c) - 1 for c in curves)
    history = np.array([[c[min(t, len(c) - 1)] for c in curves] for t in range(g_used + 1)])
    trace = [float(row.mean() / L) for row in history[1:]]
    return ClonalResult(rep.ab[:m].copy(), trace, g_used, bool(converged), history, history[-1],
                        rep.clones_evaluated)


@dataclass
class ClassMemory:
    labels: list[Hashable]
    cells: np.ndarray
    affinities: np.ndarray = field(default_factory=lambda: np.zeros(0))
    generations: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.labels)


def clonclas_train(classes: Sequence[tuple[Hashable, Sequence]], params: ClonalParams,
                   rng: np.random.Generator) -> ClassMemory:
    """Learn one generalised memory cell per class.

    A candidate's affinity to a class is the sum of its Hamming distances to
    all E exemplars (maximum E*L).  Classes are outermost, generations inner;
    after each response Ab_r is replaced wholesale by the best r mutants.
    """
    if not classes:
        raise ClonalError("no classes given")
    labels, mats = [], []
    for label, exemplars in classes:
        if len(exemplars) == 0:
            raise ClonalError(f"class {label!r} has no exemplars")
        labels.append(label)
        mats.append(_as_bit_matrix(exemplars, "exemplar"))
    L = mats[0].shape[1]
    if any(M.shape[1] != L for M in mats):
        raise ShapeSpaceError("classes do not share one pattern length")
    rep = _Repertoire(len(mats), L, params, rng)
    affs, gens = [], []
    for i, E in enumerate(mats):
        ones = E.sum(axis=0)
        e = E.shape[0]
        # sum_j hamming(x, E_j) = sum over bits of (#exemplars disagreeing with x)
        score = lambda A, ones=ones, e=e: (np.where(A == 1, e - ones, ones)).sum(axis=1)
        max_score = e * L
        g = 0
        while g < params.gen and score(rep.ab[i : i + 1])[0] / max_score < params.epsilon:
            g += 1
            rep.step(i, score, max_score, remainder="all")
            if params.replace_scope == "generation":
                rep.inject_random(score)
        affs.append(int(score(rep.ab[i : i + 1])[0]))
        gens.append(g)
    return ClassMemory(labels, rep.ab[: len(mats)].copy(), np.array(affs), gens)


def classify(pattern, memory: ClassMemory, epsilon: float):
    """Label of the best-binding memory cell, or None when it binds below ``epsilon``.

    Affinity is Hamming distance over L; ties go to the lowest class index.
    """
    if len(memory) == 0:
        raise ClonalError("empty memory")
    x = binary_vector(pattern)
    if x.size != memory.cells.shape[1]:
        raise ShapeSpaceError("pattern length differs from memory")
    aff = _hamming_rows(memory.cells, x) / x.size
    best = int(np.argmax(aff))
    return memory.labels[best] if aff[best] >= epsilon else None


@dataclass
class PartitionedResult:
    memory: np.ndarray
    antigen_index: np.ndarray
    parts: list[ClonalResult]

    @property
    def affinities(self) -> np.ndarray:
        return np.concatenate([p.affinities for p in self.parts])


def partitioned_clonalg(antigens, partitions: int, params: ClonalParams, seeds: Sequence[int],
                        max_workers: int | None = None) -> PartitionedResult:
    """Round-robin split of the antigens into ``partitions`` groups trained independently.

    Each group owns ``seeded_rng(seeds[g])``, so the merged memory (rows in
    group order) does not depend on scheduling.  ``max_workers=1`` runs the
    groups sequentially.
    """
    Ag = _as_bit_matrix(antigens)
    if not 1 <= partitions <= Ag.shape[0]:
        raise ClonalError(f"partitions must be in [1, {Ag.shape[0]}], got {partitions}")
    if len(seeds) != partitions:
        raise ClonalError("need exactly one seed per partition")
    groups = [np.arange(g, Ag.shape[0], partitions) for g in range(partitions)]

    def run(g):
        return clonalg_train(Ag[groups[g]], params, seeded_rng(seeds[g]))

    if max_workers == 1 or partitions == 1:
        parts = [run(g) for g in range(partitions)]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            parts = list(pool.map(run, range(partitions)))
    return PartitionedResult(np.vstack([p.memory for p in parts]), np.concatenate(groups), parts)


def decode_binary(bits, z_min: float, z_max: float) -> float:
    """Map a bit string to a real in [z_min, z_max]; bit i carries weight 2**i."""
    b = binary_vector(bits)
    L = b.size
    z = sum(1 << i for i, v in enumerate(b) if v)
    return z_min + z * (z_max - z_min) / ((1 << L) - 1)


@dataclass(frozen=True)
class OptProblem:
    """Maximise ``objective`` over a box, each dimension encoded in ``bits_per_dim`` bits."""

    objective: Callable[[np.ndarray], float]
    z_min: tuple[float, ...]
    z_max: tuple[float, ...]
    bits_per_dim: int = 16

    def __post_init__(self):
        lo, hi = np.atleast_1d(self.z_min), np.atleast_1d(self.z_max)
        if lo.shape != hi.shape or not (lo < hi).all():
            raise ClonalError("need z_min < z_max in every dimension")
        if self.bits_per_dim < 1:
            raise ClonalError("bits_per_dim must be >= 1")

    @property
    def dims(self) -> int:
        return np.atleast_1d(self.z_min).size

    @property
    def length(self) -> int:
        return self.dims * self.bits_per_dim

    def decode(self, rows: np.ndarray) -> np.ndarray:
        """Decode an ``(n, dims*bits)`` matrix to ``(n, dims)`` reals."""
        rows = np.atleast_2d(rows)
        L = self.bits_per_dim
        weights = 2.0 ** np.arange(L)
        fields = rows.reshape(rows.shape[0], self.dims, L)
        z = fields @ weights
        lo, hi = np.atleast_1d(self.z_min), np.atleast_1d(self.z_max)
        return lo + z * (hi - lo) / (2.0**L - 1)


@dataclass
class OptResult:
    bits: np.ndarray
    z: np.ndarray
    score: float
    trace: list[float]


def opt_clonalg(problem: OptProblem, params: ClonalParams, rng: np.random.Generator) -> OptResult:
    """Function maximisation; the whole repertoire acts as memory.

    Per generation: clone the n best, hypermutate (rate from the min-max
    normalised score), keep the N best of parents and mutants, then replace
    the d worst with random antibodies.
    """
    L = problem.length

    def evaluate(rows):
        return np.array([float(problem.objective(z)) for z in problem.decode(rows)])

    ab = rng.integers(0, 2, size=(params.N, L), dtype=np.uint8)
    f = evaluate(ab)
    counts = np.array(clone_counts(params.pool_size(), params.beta)[: params.n])
    trace = []
    for _ in range(params.gen):
        sel = _top(f, params.n)
        lo, hi = f.min(), f.max()
        fn = (f[sel] - lo) / (hi - lo) if hi > lo else np.ones(sel.size)
        parents = np.repeat(ab[sel], counts[: sel.size], axis=0)
        rates = np.repeat(np.exp(-params.rho * fn), counts[: sel.size])
        mutants = _mutate_rows(parents, rates, rng)
        fm = evaluate(mutants)
        pool = np.vstack([ab, mutants])
        fp = np.concatenate([f, fm])
        keep = _top(fp, params.N)
        ab, f = pool[keep], fp[keep]
        if params.d:
            worst = _bottom(f, params.d)
            ab[worst] = rng.integers(0, 2, size=(worst.size, L), dtype=np.uint8)
            f[worst] = evaluate(ab[worst])
        trace.append(float(f.max()))
    best = int(np.argmax(f))
    z = problem.decode(ab[best])[0]
    return OptResult(ab[best].copy(), z, float(f[best]), trace)
