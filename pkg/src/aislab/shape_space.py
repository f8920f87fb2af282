"""Shape-space primitives: vectors, distance metrics, binding and seeded RNG.

Antibodies and antigens are plain 1-D numpy arrays.  Real-valued vectors use
``float64``; binary vectors hold only 0/1 values (any integer or bool dtype).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

RNG_ALGORITHM = "PCG64"

Seed = Union[int, np.integer]


class ShapeSpaceError(ValueError):
    """Raised on malformed shape vectors (wrong length, non-binary bits...)."""


def seeded_rng(seed: Seed) -> np.random.Generator:
    """Return a PCG64-backed generator for ``seed`` (an unsigned 64-bit int).

    PCG64 streams are platform independent, so equal seeds give equal
    sequences everywhere.  Every stochastic routine in the package takes one
    of these explicitly; there is no module-level generator.
    """
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ShapeSpaceError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def as_rng(rng: np.random.Generator | Seed) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return seeded_rng(rng)


def real_vector(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ShapeSpaceError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    return v


def binary_vector(values) -> np.ndarray:
    v = np.asarray(values)
    if v.ndim != 1 or v.size == 0:
        raise ShapeSpaceError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.isin(v, (0, 1)).all():
        raise ShapeSpaceError("binary vector contains values other than 0/1")
    return v.astype(np.uint8)


def is_binary(values) -> bool:
    v = np.asarray(values)
    return v.dtype.kind in "biu" and bool(np.isin(v, (0, 1)).all())


def _pair(a, b, conv):
    a, b = conv(a), conv(b)
    if a.shape != b.shape:
        raise ShapeSpaceError(f"dimension mismatch: {a.size} vs {b.size}")
    return a, b


def euclidean_distance(a, b) -> float:
    a, b = _pair(a, b, real_vector)
    return float(math.sqrt(float(np.dot(a - b, a - b))))


def manhattan_distance(a, b, root: bool = False) -> float:
    """Sum of absolute coordinate differences.

    ``root=True`` returns the square root of that sum, the variant printed in
    some texts; it is not a standard Manhattan metric and is off by default.
    """
    a, b = _pair(a, b, real_vector)
    s = float(np.abs(a - b).sum())
    return math.sqrt(s) if root else s


def hamming_distance(a, b) -> int:
    a, b = _pair(a, b, binary_vector)
    return int(np.count_nonzero(a != b))


METRICS = ("euclidean", "manhattan", "hamming")


@dataclass(frozen=True)
class AffinityConfig:
    """How distances are measured and turned into a binding decision.

    Binding happens at *high* distance (complementarity): the step function
    returns 1 once ``distance >= epsilon``.  ``s_curve`` is a logistic centred
    on ``epsilon`` with steepness ``slope``.
    """

    metric: str = "euclidean"
    epsilon: float = 0.0
    binding_shape: str = "step"
    slope: float = 10.0
    manhattan_root: bool = False

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ShapeSpaceError(f"unknown metric {self.metric!r}")
        if self.binding_shape not in ("step", "s_curve"):
            raise ShapeSpaceError(f"unknown binding shape {self.binding_shape!r}")
        if self.epsilon < 0:
            raise ShapeSpaceError("epsilon must be >= 0")

    @property
    def binary(self) -> bool:
        return self.metric == "hamming"

    def check(self, v) -> np.ndarray:
        """Validate ``v`` against the metric's variant (binary vs real)."""
        if self.binary:
            return binary_vector(v)
        if is_binary(v) and np.asarray(v).dtype.kind == "b":
            raise ShapeSpaceError(f"{self.metric} needs real-valued vectors")
        return real_vector(v)

    def distance(self, a, b) -> float:
        return distance(a, b, self.metric, manhattan_root=self.manhattan_root)


def distance(a, b, metric: str = "euclidean", manhattan_root: bool = False) -> float:
    if metric == "euclidean":
        return euclidean_distance(a, b)
    if metric == "manhattan":
        return manhattan_distance(a, b, root=manhattan_root)
    if metric == "hamming":
        return float(hamming_distance(a, b))
    raise ShapeSpaceError(f"unknown metric {metric!r}")


def pairwise_distances(A, B, metric: str = "euclidean") -> np.ndarray:
    """Distance matrix between the rows of ``A`` and ``B``.

    Vectorised counterpart of :func:`distance`; hamming returns raw counts
    rather than scipy's fraction.
    """
    from scipy.spatial.distance import cdist

    A = np.atleast_2d(np.asarray(A))
    B = np.atleast_2d(np.asarray(B))
    if A.shape[1] != B.shape[1]:
        raise ShapeSpaceError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if metric == "hamming":
        return (A[:, None, :] != B[None, :, :]).sum(-1).astype(float)
    name = {"euclidean": "euclidean", "manhattan": "cityblock"}.get(metric)
    if name is None:
        raise ShapeSpaceError(f"unknown metric {metric!r}")
    return cdist(A.astype(float), B.astype(float), metric=name)


def binding_value(dist: float, cfg: AffinityConfig) -> float:
    if dist < 0:
        raise ShapeSpaceError("distance must be >= 0")
    if cfg.binding_shape == "step":
        return 1.0 if dist >= cfg.epsilon else 0.0
    z = cfg.slope * (dist - cfg.epsilon)
    # numerically safe logistic
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)
