"""Level-balanced sampling of fixed-length sub-intervals."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .segment import point_levels, segment_interval

log = logging.getLogger(__name__)


@dataclass
class LevelPool:
    """Sampled sub-intervals plus bookkeeping about undersampled levels."""

    items: list
    undersampled: dict = field(default_factory=dict)
    requested: int = 0


@dataclass
class SubInterval:
    source_id: int
    group_id: int
    start: int  # 0-based
    level: int
    centre: int  # 0-based point index of the centre
    values: np.ndarray
    labels: np.ndarray
    clean_labels: np.ndarray
    point_levels: np.ndarray


def sample_intervals_per_level(intervals, per_level, length, seed, N_l=5):
    """Draw ``per_level`` sub-intervals of ``length`` points for each level 1..N_l.

    A sub-interval's level is the curriculum level of its centre point
    (index ``start + length // 2``), computed from the working labels. Centres
    are drawn uniformly without replacement among eligible positions; a level
    with too few eligible centres is undersampled and reported in the pool.
    """
    if per_level < 1:
        raise ValueError("per_level must be >= 1")
    rng = np.random.default_rng(seed)
    half = length // 2
    levels_by_iv = [point_levels(iv.labels, N_l) for iv in intervals]
    candidates = {lv: [] for lv in range(1, N_l + 1)}
    for k, (iv, lv) in enumerate(zip(intervals, levels_by_iv)):
        if iv.length < length:
            continue
        centres = np.arange(half, iv.length - length + half + 1)
        for level in range(1, N_l + 1):
            ok = centres[lv[centres] == level]
            candidates[level].extend((k, int(c)) for c in ok)
    items, under = [], {}
    for level in range(1, N_l + 1):
        pool = candidates[level]
        if len(pool) < per_level:
            log.warning("level %d has %d eligible centres, %d requested", level, len(pool), per_level)
            under[level] = len(pool)
        take = min(per_level, len(pool))
        if take == 0:
            continue
        chosen = rng.choice(len(pool), size=take, replace=False)
        for idx in sorted(chosen):
            k, c = pool[idx]
            iv = intervals[k]
            s = c - half
            items.append(SubInterval(iv.interval_id, iv.group_id, s, level, c,
                                     iv.values[s:s + length], iv.labels[s:s + length],
                                     iv.clean_labels[s:s + length], levels_by_iv[k][s:s + length]))
    return LevelPool(items, under, per_level)


def segment_pool(pool, w, r):
    """Segment every sub-interval; ids are assigned in pool order."""
    out = []
    for i, sub in enumerate(pool.items if isinstance(pool, LevelPool) else pool):
        out.append(segment_interval(sub.values, sub.labels, w, r, clean=sub.clean_labels,
                                    levels=sub.point_levels, interval_id=i, level=sub.level,
                                    group_id=sub.group_id, source_id=sub.source_id, start=sub.start))
    return out
