"""Synthetic multi-class varying-duration (MVD) recordings."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError


@dataclass
class TimeInterval:
    """One labelled multivariate recording.

    ``labels`` are the working (possibly disturbed) point labels;
    ``clean_labels`` keep the generator's ground truth.
    """

    interval_id: int
    group_id: int
    values: np.ndarray
    labels: np.ndarray
    clean_labels: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.clean_labels = np.asarray(self.clean_labels, dtype=np.int64)
        if self.values.ndim != 2 or self.values.shape[0] == 0 or self.values.shape[1] == 0:
            raise ValueError(f"values must be a non-empty T x F matrix, got {self.values.shape}")
        if self.labels.shape != (self.values.shape[0],) or self.clean_labels.shape != self.labels.shape:
            raise ValueError("labels must have one entry per time point")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"interval {self.interval_id} has non-finite values")
        if self.labels.min() < 0:
            raise ValueError("labels must be non-negative class indices")

    @property
    def length(self):
        return self.values.shape[0]

    def replace_labels(self, labels):
        return TimeInterval(self.interval_id, self.group_id, self.values, labels, self.clean_labels)


@dataclass
class GeneratorConfig:
    n_classes: int = 2
    n_features: int = 2
    n_intervals: int = 200
    n_groups: int = 4
    runs_per_interval: int = 4
    duration_range: tuple = (128, 256)
    crossfade: int = 8
    noise: float = 0.3
    ar_coef: float = 0.6
    base_freq: float = 0.05
    freq_step: float = 0.05
    duration_ranges: list = field(default_factory=list)

    def validate(self):
        if self.n_classes < 2:
            raise ConfigError("need at least two classes", "n_classes")
        if self.n_features < 1:
            raise ConfigError("need at least one feature", "n_features")
        if self.n_intervals < 1:
            raise ConfigError("need at least one interval", "n_intervals")
        if self.n_groups < 1:
            raise ConfigError("need at least one group", "n_groups")
        if self.runs_per_interval < 1:
            raise ConfigError("need at least one run", "runs_per_interval")
        for rng in self.ranges():
            lo, hi = rng
            if lo < 1 or hi < lo:
                raise ConfigError(f"empty or non-positive duration range {rng}", "duration_range")
        if self.crossfade < 0:
            raise ConfigError("crossfade must be >= 0", "crossfade")
        if self.noise < 0:
            raise ConfigError("noise must be >= 0", "noise")
        if not 0 <= self.ar_coef < 1:
            raise ConfigError("ar_coef must lie in [0, 1)", "ar_coef")
        return self

    def ranges(self):
        if self.duration_ranges:
            if len(self.duration_ranges) != self.n_classes:
                raise ConfigError("one duration range per class required", "duration_ranges")
            return [tuple(r) for r in self.duration_ranges]
        return [tuple(self.duration_range)] * self.n_classes

    def frequency(self, cls):
        return self.base_freq + self.freq_step * cls

    def to_dict(self):
        d = asdict(self)
        d["duration_range"] = list(self.duration_range)
        return d


def class_signal(cfg: GeneratorConfig, cls: int, length: int, rng) -> np.ndarray:
    """Sinusoid at the class frequency plus AR(1) noise, one column per feature."""
    t = np.arange(length, dtype=np.float64)
    freq = cfg.frequency(cls)
    amp = 1.0 + 0.25 * cls / max(cfg.n_classes - 1, 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=cfg.n_features)
    out = amp * np.sin(2.0 * np.pi * freq * t[:, None] + phases[None, :])
    if cfg.noise > 0:
        phi = cfg.ar_coef
        shocks = rng.standard_normal((length, cfg.n_features)) * cfg.noise * np.sqrt(1.0 - phi * phi)
        noise = np.empty_like(shocks)
        noise[0] = shocks[0] / np.sqrt(1.0 - phi * phi)
        for i in range(1, length):
            noise[i] = phi * noise[i - 1] + shocks[i]
        out += noise
    return out


def _run_plan(cfg, rng):
    ranges = cfg.ranges()
    classes = [int(rng.integers(cfg.n_classes))]
    for _ in range(cfg.runs_per_interval - 1):
        nxt = int(rng.integers(cfg.n_classes - 1))
        classes.append(nxt if nxt < classes[-1] else nxt + 1)
    lengths = [int(rng.integers(ranges[c][0], ranges[c][1] + 1)) for c in classes]
    return classes, lengths


def generate_interval(cfg: GeneratorConfig, interval_id: int, rng) -> TimeInterval:
    classes, lengths = _run_plan(cfg, rng)
    total = int(sum(lengths))
    labels = np.repeat(np.asarray(classes, dtype=np.int64), lengths)
    signals = {c: class_signal(cfg, c, total, rng) for c in sorted(set(classes))}

    # Mixing weight of each run's process at every time point; crossfades are
    # linear ramps centred on each boundary.
    weights = np.zeros((len(classes), total))
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    for k, (s, n) in enumerate(zip(starts, lengths)):
        weights[k, s:s + n] = 1.0
    half = cfg.crossfade / 2.0
    if cfg.crossfade > 0:
        t = np.arange(total) + 0.5
        for k in range(1, len(classes)):
            b = starts[k]
            lo, hi = int(max(np.floor(b - half), starts[k - 1])), int(min(np.ceil(b + half), starts[k] + lengths[k]))
            ramp = np.clip((t[lo:hi] - (b - half)) / cfg.crossfade, 0.0, 1.0)
            weights[k - 1, lo:hi] = 1.0 - ramp
            weights[k, lo:hi] = ramp
    values = np.zeros((total, cfg.n_features))
    for k, c in enumerate(classes):
        values += weights[k][:, None] * signals[c]
    group = interval_id % cfg.n_groups
    return TimeInterval(interval_id, group, values, labels, labels.copy())


def generate_mvd(cfg: GeneratorConfig, seed: int):
    """Generate ``cfg.n_intervals`` recordings; identical seeds give identical output."""
    cfg.validate()
    root = np.random.SeedSequence(seed)
    out = []
    for i, child in enumerate(root.spawn(cfg.n_intervals)):
        out.append(generate_interval(cfg, i, np.random.default_rng(child)))
    return out
