"""Sliding-window segmentation, class runs and curriculum levels."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import SegmentationError


@dataclass(frozen=True)
class ClassRun:
    start: int  # 1-based, inclusive
    end: int  # 1-based, inclusive
    cls: int

    @property
    def length(self):
        return self.end - self.start + 1


@dataclass
class SegmentSequence:
    """The L windows of one interval with their majority labels.

    ``levels`` holds the curriculum level of each window's centre point and
    ``level`` the tag of the whole interval (its centre point's level).
    """

    interval_id: int
    segments: np.ndarray  # (L, w, F)
    seg_labels: np.ndarray
    levels: np.ndarray
    window_len: int
    stride: int
    clean_seg_labels: np.ndarray | None = None
    level: int = 1
    group_id: int = 0
    source_id: int = -1
    start: int = 0

    @property
    def n_segments(self):
        return self.segments.shape[0]


def n_windows(length, w, r):
    return (length - w) // r + 1


def window_starts(length, w, r):
    """0-based start index of each window."""
    return np.arange(n_windows(length, w, r)) * r


def majority(labels):
    """Most frequent label; ties go to the label at the window centre ``(w - 1) // 2``.

    If the centre label is not among the tied labels the smallest tied label wins.
    """
    labels = np.asarray(labels)
    counts = np.bincount(labels)
    top = counts.max()
    centre = int(labels[(len(labels) - 1) // 2])
    if counts[centre] == top:
        return centre
    return int(np.flatnonzero(counts == top)[0])


def segment_labels(Y, w, r):
    Y = np.asarray(Y, dtype=np.int64)
    return np.array([majority(Y[s:s + w]) for s in window_starts(len(Y), w, r)], dtype=np.int64)


def segment_interval(X, Y, w, r, clean=None, levels=None, interval_id=0, **meta):
    """Cut ``(X, Y)`` into ``L = (T - w) // r + 1`` windows of length ``w`` and stride ``r``."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.int64)
    if X.ndim == 1:
        X = X[:, None]
    T = X.shape[0]
    if Y.shape != (T,):
        raise SegmentationError(f"labels length {Y.shape} does not match values length {T}")
    if r < 1:
        raise SegmentationError(f"stride must be >= 1, got {r}")
    if w < 1 or w > T:
        raise SegmentationError(f"window length {w} not in [1, {T}]")
    starts = window_starts(T, w, r)
    idx = starts[:, None] + np.arange(w)[None, :]
    segments = X[idx]
    seg_labels = segment_labels(Y, w, r)
    clean_seg = segment_labels(clean, w, r) if clean is not None else None
    if levels is None:
        seg_levels = np.ones(len(starts), dtype=np.int64)
    else:
        seg_levels = np.asarray(levels, dtype=np.int64)[starts + (w - 1) // 2]
    return SegmentSequence(interval_id, segments, seg_labels, seg_levels, w, r, clean_seg, **meta)


def find_class_runs(Y):
    """Maximal constant-label runs, in order."""
    Y = np.asarray(Y)
    if Y.size == 0:
        return []
    change = np.flatnonzero(Y[1:] != Y[:-1]) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [len(Y)]])
    return [ClassRun(int(s) + 1, int(e), int(Y[s])) for s, e in zip(starts, ends)]


def chunk_index(K, N_l=5):
    """1-based chunk of every position 1..K in the 2*N_l equipartition of (0, K].

    Position p belongs to chunk j when (j-1)K/(2N_l) < p <= jK/(2N_l).
    """
    p = np.arange(1, K + 1)
    # integer form of ceil(p * 2N / K)
    return -((-p * 2 * N_l) // K)


def assign_levels(K, N_l=5):
    """Curriculum level (1 = core ... N_l = next to the boundaries) of positions 1..K."""
    if K < 1:
        return np.zeros(0, dtype=np.int64)
    if K >= 2 * N_l:
        j = chunk_index(K, N_l)
        return np.where(j <= N_l, N_l - j + 1, j - N_l).astype(np.int64)
    p = np.arange(1, K + 1, dtype=np.float64)
    dist = np.minimum(p - 0.5, K - p + 0.5)
    lv = np.ceil(N_l * (1.0 - 2.0 * dist / K) - 1e-12)
    return np.clip(lv, 1, N_l).astype(np.int64)


def literal_level_bounds(K, N_l=5):
    """Positions named by the two closed-form endpoint formulas for levels 1 and N_l.

    Level 1: the open interval (ceil((N_l-1)K/2N_l), floor((N_l+1)K/2N_l)).
    Level N_l: [1, ceil(K/2N_l)) U (floor((2N_l-1)K/2N_l), K].
    """
    c = lambda j: j * K / (2 * N_l)  # noqa: E731
    lo, hi = math.ceil(c(N_l - 1)), math.floor(c(N_l + 1))
    core = set(range(lo + 1, hi))
    edge = set(range(1, math.ceil(c(1)))) | set(range(math.floor(c(2 * N_l - 1)) + 1, K + 1))
    return core, edge


def point_levels(Y, N_l=5):
    """Level of every time point, computed run by run."""
    out = np.empty(len(Y), dtype=np.int64)
    for run in find_class_runs(Y):
        out[run.start - 1:run.end] = assign_levels(run.length, N_l)
    return out


def distance_to_boundary(Y):
    """Distance (in points) from every point to the nearest run edge, 0 at the edge."""
    out = np.empty(len(Y), dtype=np.int64)
    for run in find_class_runs(Y):
        p = np.arange(run.length)
        out[run.start - 1:run.end] = np.minimum(p, run.length - 1 - p)
    return out
