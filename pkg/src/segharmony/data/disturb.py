"""Label corruption: boundary relocation and symmetric segment relabelling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .segment import find_class_runs


@dataclass
class DisturbanceConfig:
    mode: str = "boundary"
    ratio: float = 0.0
    seed: int = 0

    def validate(self):
        if self.mode not in ("boundary", "symmetric"):
            raise ConfigError(f"unknown disturbance mode {self.mode!r}", "mode")
        if not 0.0 <= self.ratio <= 1.0:
            raise ConfigError(f"ratio must lie in [0, 1], got {self.ratio}", "ratio")
        return self


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def disturb_boundaries(Y, ratio, seed):
    """Move every interior class boundary by up to ``ratio`` of the adjacent run.

    Boundaries are handled left to right. Each one moves backward (into the
    run before it) or forward (into the run after it) with probability 0.5;
    the shift is uniform on ``0 .. floor(ratio * K)`` where ``K`` is the
    original length of the run being encroached. Shifts are clamped so every
    run keeps at least one point, which preserves the run count and classes.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"ratio must lie in [0, 1], got {ratio}", "ratio")
    Y = np.asarray(Y, dtype=np.int64)
    out = Y.copy()
    runs = find_class_runs(Y)
    if len(runs) < 2 or ratio == 0:
        return out
    rng = _rng(seed)
    # current 0-based start of each run; run k spans [start[k], start[k+1])
    start = [run.start - 1 for run in runs] + [len(Y)]
    for k in range(1, len(runs)):
        forward = rng.random() < 0.5
        target = runs[k] if forward else runs[k - 1]
        limit = int(np.floor(ratio * target.length))
        shift = int(rng.integers(0, limit + 1))
        b = start[k]
        if forward:
            new_b = min(b + shift, start[k + 1] - 1)
            out[b:new_b] = runs[k - 1].cls
        else:
            new_b = max(b - shift, start[k - 1] + 1)
            out[new_b:b] = runs[k].cls
        start[k] = new_b
    return out


def disturb_symmetric(seg_labels, ratio, n_classes, seed):
    """Relabel ``floor(ratio * L)`` distinct segments to a uniformly drawn different class."""
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"ratio must lie in [0, 1], got {ratio}", "ratio")
    y = np.asarray(seg_labels, dtype=np.int64).copy()
    n = int(np.floor(ratio * len(y)))
    if n == 0:
        return y
    rng = _rng(seed)
    idx = rng.choice(len(y), size=n, replace=False)
    for i in idx:
        other = int(rng.integers(n_classes - 1))
        y[i] = other if other < y[i] else other + 1
    return y


def disturb_dataset(intervals, cfg: DisturbanceConfig):
    """Boundary-disturb the working labels of every recording (clean labels untouched)."""
    cfg.validate()
    if cfg.mode != "boundary":
        raise ConfigError("recording-level disturbance supports mode=boundary only; "
                          "symmetric disturbance applies to segment labels", "mode")
    root = np.random.SeedSequence(cfg.seed)
    out = []
    for iv, child in zip(intervals, root.spawn(len(intervals))):
        out.append(iv.replace_labels(disturb_boundaries(iv.labels, cfg.ratio, np.random.default_rng(child))))
    return out
