"""Synthetic generators, UCI loaders and the binary digit glyphs.

Every dataset is a :class:`LabeledDataset`; CSV is the interchange format
(one row per point, label in the last column).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray
    name: str = "data"
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int)
        if self.points.shape[0] != self.labels.shape[0]:
            raise DatasetError(f"{self.points.shape[0]} points but {self.labels.shape[0]} labels")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def n_classes(self) -> int:
        return int(np.unique(self.labels).size)

    def class_counts(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.bincount(self.labels))


@dataclass(frozen=True)
class Component:
    mean: tuple[float, ...]
    scale: tuple[float, ...]
    count: int


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Diagonal Gaussian components; ``scale`` entries are standard deviations."""

    components: tuple[Component, ...]

    def __post_init__(self):
        if not self.components:
            raise DatasetError("mixture needs at least one component")
        dims = {len(c.mean) for c in self.components} | {len(c.scale) for c in self.components}
        if len(dims) != 1:
            raise DatasetError("component means and scales must share one dimension")
        if any(c.count < 1 for c in self.components):
            raise DatasetError("component counts must be >= 1")

    @property
    def dims(self) -> int:
        return len(self.components[0].mean)

    def resized(self, count: int) -> "GaussianMixtureSpec":
        return GaussianMixtureSpec(tuple(Component(c.mean, c.scale, count) for c in self.components))


def _iso(means, s, count):
    return tuple(Component(tuple(m), (s,) * len(m), count) for m in means)


PRESETS: dict[str, GaussianMixtureSpec] = {
    "dataset1": GaussianMixtureSpec((
        Component((0.1, 0.1), (0.11, 0.1), 100),
        Component((0.35, 0.1), (0.11, 0.1), 100),
    )),
    "dataset2": GaussianMixtureSpec(
        _iso([(x, y) for x in (0.1, 0.5, 0.9) for y in (0.1, 0.5, 0.9)], 0.08, 25)
    ),
    "dataset3": GaussianMixtureSpec(_iso([(1, 1, 1), (2, 2.5, 2.5), (2, 3, 3)], 0.3, 50)),
}


def gen_gaussian_mixture(spec: GaussianMixtureSpec | str, rng: np.random.Generator,
                         name: str | None = None) -> LabeledDataset:
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise DatasetError(f"unknown preset {spec!r}; choose from {sorted(PRESETS)}")
        name = name or spec
        spec = PRESETS[spec]
    pts, labels = [], []
    for k, c in enumerate(spec.components):
        z = rng.standard_normal((c.count, spec.dims))
        pts.append(np.asarray(c.mean) + np.asarray(c.scale) * z)
        labels.append(np.full(c.count, k))
    return LabeledDataset(np.vstack(pts), np.concatenate(labels), name or "mixture")


SHAPE_DEFAULT_COUNTS = {
    "two_spirals": (95, 95),
    "chainlink_rings": (250, 250),
    "concentric_circles": (210, 420),
}


def gen_shapes(kind: str, rng: np.random.Generator, counts: Sequence[int] | None = None,
               noise: float = 0.0, radii: tuple[float, float] = (1.0, 2.0)) -> LabeledDataset:
    """Two interleaved spirals (2-D), two linked rings (3-D) or two concentric circles (2-D).

    ``counts`` gives the points per class; by default the totals are 190, 500
    and 630.  ``radii`` only applies to circles; the default counts put the
    points at equal arc spacing on radii 1 and 2.  Noise is isotropic Gaussian
    with standard deviation ``noise``.
    """
    if kind not in SHAPE_DEFAULT_COUNTS:
        raise DatasetError(f"unknown shape {kind!r}; choose from {sorted(SHAPE_DEFAULT_COUNTS)}")
    counts = tuple(counts or SHAPE_DEFAULT_COUNTS[kind])
    if len(counts) != 2 or min(counts) < 1:
        raise DatasetError("shapes need two class counts >= 1")
    parts = []
    if kind == "two_spirals":
        for k, n in enumerate(counts):
            t = np.linspace(0.25, 1.0, n) * 3 * math.pi
            sign = 1 if k == 0 else -1
            parts.append(sign * np.column_stack([t * np.cos(t), t * np.sin(t)]) / (3 * math.pi))
    elif kind == "chainlink_rings":
        for k, n in enumerate(counts):
            t = 2 * math.pi * np.arange(n) / n
            if k == 0:
                parts.append(np.column_stack([np.cos(t), np.sin(t), np.zeros(n)]))
            else:
                parts.append(np.column_stack([1 + np.cos(t), np.zeros(n), np.sin(t)]))
    else:
        for r, n in zip(radii, counts):
            t = 2 * math.pi * np.arange(n) / n
            parts.append(r * np.column_stack([np.cos(t), np.sin(t)]))
    pts = np.vstack(parts)
    if noise > 0:
        pts = pts + noise * rng.standard_normal(pts.shape)
    labels = np.concatenate([np.full(n, k) for k, n in enumerate(counts)])
    return LabeledDataset(pts, labels, kind)


def _data_file(name: str):
    return resources.files("aislab").joinpath("data", name)


IRIS_CLASSES = ("Iris-setosa", "Iris-versicolor", "Iris-virginica")


def _rows(path):
    if path is None:
        raise DatasetError("no path")
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if row and any(cell.strip() for cell in row):
                yield lineno, [cell.strip() for cell in row]


def load_iris(path=None) -> LabeledDataset:
    """Read UCI ``iris.data``; the bundled copy is used when ``path`` is None."""
    path = path or _data_file("iris.data")
    pts, labels = [], []
    for lineno, row in _rows(path):
        if len(row) != 5 or row[4] not in IRIS_CLASSES:
            raise DatasetError(f"line {lineno}: expected 4 numbers and a species name")
        try:
            pts.append([float(v) for v in row[:4]])
        except ValueError:
            raise DatasetError(f"line {lineno}: non-numeric measurement") from None
        labels.append(IRIS_CLASSES.index(row[4]))
    ds = LabeledDataset(np.array(pts).reshape(-1, 4), labels, "iris",
                        ["Setosa", "Versicolor", "Virginica"])
    if len(ds) != 150 or ds.class_counts() != (50, 50, 50):
        raise DatasetError(f"iris needs 150 rows with 50 per class, got {len(ds)} rows")
    return ds


MISSING_POLICIES = ("impute_mean", "impute_median", "drop")


def load_breast_cancer(path=None, missing_policy: str = "impute_mean") -> LabeledDataset:
    """Read UCI ``breast-cancer-wisconsin.data``.

    ``?`` marks a missing value.  ``impute_mean`` fills it with the rounded
    mean of the feature's present values, ``impute_median`` with their median,
    and ``drop`` discards the row.  Labels: benign (2) -> 0, malignant (4) -> 1.
    """
    if missing_policy not in MISSING_POLICIES:
        raise DatasetError(f"unknown missing policy {missing_policy!r}")
    path = path or _data_file("breast-cancer-wisconsin.data")
    rows, labels = [], []
    for lineno, row in _rows(path):
        if len(row) != 11 or row[10] not in ("2", "4"):
            raise DatasetError(f"line {lineno}: expected id, 9 features and class 2/4")
        try:
            rows.append([np.nan if v == "?" else float(v) for v in row[1:10]])
        except ValueError:
            raise DatasetError(f"line {lineno}: non-numeric feature") from None
        labels.append(0 if row[10] == "2" else 1)
    X = np.array(rows).reshape(-1, 9)
    y = np.array(labels)
    missing = np.isnan(X)
    if missing_policy == "drop":
        keep = ~missing.any(axis=1)
        X, y = X[keep], y[keep]
    elif missing.any():
        for j in np.flatnonzero(missing.any(axis=0)):
            present = X[~missing[:, j], j]
            fill = present.mean() if missing_policy == "impute_mean" else np.median(present)
            X[missing[:, j], j] = math.floor(fill + 0.5)
    return LabeledDataset(X, y, "breast_cancer", ["Benign", "Malignant"])


GLYPH_SHAPE = (12, 10)
MIN_GLYPH_DISTANCE = 20


def parse_glyphs(text: str) -> tuple[list[np.ndarray], list[str]]:
    """Parse 12x10 glyph blocks ('X'/'1' set, '.'/'0' clear) separated by blank lines.

    A ``# label: <name>`` comment names the following glyph; other ``#`` lines
    are ignored.
    """
    glyphs, labels, block, label = [], [], [], None

    def flush():
        nonlocal block, label
        if not block:
            return
        if len(block) != GLYPH_SHAPE[0] or any(len(r) != GLYPH_SHAPE[1] for r in block):
            raise DatasetError(f"glyph {len(glyphs)} is not {GLYPH_SHAPE[0]}x{GLYPH_SHAPE[1]}")
        glyphs.append(np.array(block, dtype=np.uint8).ravel())
        labels.append(label if label is not None else str(len(labels)))
        block, label = [], None

    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#"):
            if s[1:].strip().lower().startswith("label:"):
                label = s.split(":", 1)[1].strip()
            continue
        if not s:
            flush()
            continue
        bad = set(s) - set("X1.0")
        if bad:
            raise DatasetError(f"unexpected glyph characters {sorted(bad)}")
        block.append([1 if c in "X1" else 0 for c in s])
    flush()
    return glyphs, labels


def digit_glyphs(source=None, with_labels: bool = False):
    """Flattened 120-bit digit glyphs, from a bitmap file or the bundled set."""
    if source is None:
        text = _data_file("digits.txt").read_text()
    else:
        text = Path(source).read_text()
    glyphs, labels = parse_glyphs(text)
    if not glyphs:
        raise DatasetError("no glyphs found")
    if source is None:
        G = np.vstack(glyphs)
        dist = (G[:, None, :] != G[None, :, :]).sum(-1)
        np.fill_diagonal(dist, GLYPH_SHAPE[0] * GLYPH_SHAPE[1])
        if dist.min() < MIN_GLYPH_DISTANCE:
            raise DatasetError("bundled glyphs are too similar")
    return (glyphs, labels) if with_labels else glyphs


def write_csv(ds: LabeledDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(ds.dims)] + ["label"])
        for p, y in zip(ds.points, ds.labels):
            w.writerow([repr(float(v)) for v in p] + [int(y)])


def read_csv(path, labeled: bool = True, name: str | None = None) -> LabeledDataset:
    """Load a numeric CSV; the header row is optional.  Without labels every point gets 0."""
    rows = list(_rows(path))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    try:
        [float(v) for v in rows[0][1]]
    except ValueError:
        rows = rows[1:]
    data = []
    for lineno, row in rows:
        try:
            data.append([float(v) for v in row])
        except ValueError:
            raise DatasetError(f"{path} line {lineno}: non-numeric value") from None
        if len(data[-1]) != len(data[0]):
            raise DatasetError(f"{path} line {lineno}: ragged row")
    A = np.array(data)
    if labeled:
        if A.shape[1] < 2:
            raise DatasetError(f"{path}: need at least one feature column and a label")
        return LabeledDataset(A[:, :-1], A[:, -1].astype(int), name or Path(path).stem)
    return LabeledDataset(A, np.zeros(len(A), dtype=int), name or Path(path).stem)


def load_dataset(name: str, rng: np.random.Generator | None = None,
                 missing_policy: str = "impute_mean") -> LabeledDataset:
    """Resolve a preset or built-in name, or a CSV path."""
    if name in PRESETS:
        if rng is None:
            raise DatasetError(f"preset {name!r} needs a seeded generator")
        return gen_gaussian_mixture(name, rng)
    if name in SHAPE_DEFAULT_COUNTS:
        if rng is None:
            raise DatasetError(f"shape {name!r} needs a seeded generator")
        return gen_shapes(name, rng)
    if name == "iris":
        return load_iris()
    if name in ("breast_cancer", "breast-cancer"):
        return load_breast_cancer(missing_policy=missing_policy)
    if Path(name).is_file():
        return read_csv(name)
    raise DatasetError(f"unknown dataset {name!r}")
