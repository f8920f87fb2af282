"""Negative selection: censor random detectors against a self set, then monitor.

A detector *matches* a sample when their distance is at or below the match
threshold.  Censoring guarantees that no detector matches any self pattern,
so every activation during monitoring points at nonself data.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .shape_space import METRICS, ShapeSpaceError, pairwise_distances

log = logging.getLogger(__name__)

BATCH = 256
INFLATE = 0.10


class NegSelError(ValueError):
    pass


class DetectorExhaustion(NegSelError):
    """No admissible detector was found within the attempt budget."""

    def __init__(self, attempts: int):
        super().__init__(f"no detector found after {attempts} attempts; "
                         "the self set covers the space at this threshold")
        self.attempts = attempts


@dataclass(frozen=True)
class DetectorSet:
    detectors: np.ndarray
    match_threshold: float
    metric: str = "euclidean"
    attempts: int = 0

    def __len__(self) -> int:
        return self.detectors.shape[0]


def _self_matrix(self_set, metric: str) -> np.ndarray:
    S = np.atleast_2d(np.asarray(self_set))
    if S.size == 0:
        raise NegSelError("self set is empty")
    if metric == "hamming":
        if not np.isin(S, (0, 1)).all():
            raise ShapeSpaceError("hamming matching needs a binary self set")
        return S.astype(np.uint8)
    return S.astype(float)


def censor(candidates, self_set, match_threshold: float, metric: str = "euclidean") -> np.ndarray:
    """Boolean mask of candidates that match no self pattern."""
    S = _self_matrix(self_set, metric)
    C = np.atleast_2d(np.asarray(candidates))
    return (pairwise_distances(C, S, metric) > match_threshold).all(axis=1)


class _CandidateStream:
    def __init__(self, S: np.ndarray, metric: str, rng: np.random.Generator):
        self.rng, self.binary, self.L = rng, metric == "hamming", S.shape[1]
        if not self.binary:
            lo, hi = S.min(axis=0), S.max(axis=0)
            pad = INFLATE * (hi - lo)
            self.lo, self.hi = lo - pad, hi + pad

    def draw(self, count: int) -> np.ndarray:
        if self.binary:
            return self.rng.integers(0, 2, size=(count, self.L), dtype=np.uint8)
        return self.lo + (self.hi - self.lo) * self.rng.random((count, self.L))


def generate_detectors(self_set, target_count: int, match_threshold: float, rng: np.random.Generator,
                       metric: str = "euclidean", max_attempts: int = 100_000) -> DetectorSet:
    """Generate-and-test detector construction.

    Binary candidates are uniform bit strings; real candidates are uniform over
    the self set's bounding box widened by 10% on each side.  Stops at
    ``target_count`` detectors or ``max_attempts`` candidates, whichever comes
    first; a partial set is returned (with a warning) if at least one detector
    was found.
    """
    if target_count < 1:
        raise NegSelError("target_count must be >= 1")
    if match_threshold < 0:
        raise NegSelError("match_threshold must be >= 0")
    if metric not in METRICS:
        raise ShapeSpaceError(f"unknown metric {metric!r}")
    S = _self_matrix(self_set, metric)
    stream = _CandidateStream(S, metric, rng)
    found, attempts = [], 0
    while attempts < max_attempts and len(found) < target_count:
        batch = stream.draw(min(BATCH, max_attempts - attempts))
        ok = np.flatnonzero(censor(batch, S, match_threshold, metric))
        need = target_count - len(found)
        if ok.size >= need:
            found.extend(batch[ok[:need]])
            attempts += int(ok[need - 1]) + 1
        else:
            found.extend(batch[ok])
            attempts += batch.shape[0]
    if not found:
        raise DetectorExhaustion(attempts)
    if len(found) < target_count:
        log.warning("only %d of %d detectors after %d attempts", len(found), target_count, attempts)
    return DetectorSet(np.array(found), float(match_threshold), metric, attempts)


def monitor(detectors: DetectorSet, samples) -> np.ndarray:
    """Number of detectors matching each sample; a count >= 1 flags nonself."""
    X = np.atleast_2d(np.asarray(samples))
    if X.shape[1] != detectors.detectors.shape[1]:
        raise ShapeSpaceError(f"samples have {X.shape[1]} attributes, detectors {detectors.detectors.shape[1]}")
    D = pairwise_distances(X, detectors.detectors, detectors.metric)
    return (D <= detectors.match_threshold).sum(axis=1)


def window_encode(series, window: int, stride: int = 1) -> np.ndarray:
    """Sliding windows of a real series, one row per window."""
    x = np.asarray(series, dtype=float).ravel()
    if window < 1 or stride < 1:
        raise NegSelError("window and stride must be >= 1")
    if x.size < window:
        raise NegSelError(f"series of length {x.size} is shorter than window {window}")
    starts = np.arange(0, x.size - window + 1, stride)
    return np.lib.stride_tricks.sliding_window_view(x, window)[starts].copy()


def step_change_series(n_normal: int = 400, n_changed: int = 100, period: float = 20.0,
                       changed_period: float = 7.0, amplitude: float = 1.0,
                       changed_amplitude: float = 1.0) -> tuple[np.ndarray, int]:
    """A sine that switches period/amplitude at index ``n_normal``.

    Returns the series and the change index.  Noise-free, so any window from
    the first part also occurs in a training run over the same sine.
    """
    t = np.arange(n_normal + n_changed, dtype=float)
    head = amplitude * np.sin(2 * math.pi * t[:n_normal] / period)
    tail = changed_amplitude * np.sin(2 * math.pi * (t[n_normal:] - n_normal) / changed_period)
    return np.concatenate([head, tail]), n_normal
