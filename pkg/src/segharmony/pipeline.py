"""End-to-end experiment assembly: recordings -> fold pools -> training -> metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .data import (DisturbanceConfig, GeneratorConfig, disturb_dataset, generate_mvd,
                   make_splits, sample_intervals_per_level, segment_pool)
from .errors import ConfigError
from .training import TrainRunConfig, evaluate, harmonization_report, train


@dataclass
class PoolConfig:
    window_len: int = 16
    stride: int = 8
    interval_len: int = 128
    per_level_train: int = 40
    per_level_val: int = 10
    per_level_test: int = 20
    N_l: int = 5

    def validate(self):
        if self.window_len < 1 or self.window_len > self.interval_len:
            raise ConfigError("window must fit inside the interval", "window_len")
        if self.stride < 1:
            raise ConfigError("must be >= 1", "stride")
        for key in ("per_level_train", "per_level_val", "per_level_test"):
            if getattr(self, key) < 1:
                raise ConfigError("must be >= 1", key)
        return self


@dataclass
class ExperimentConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    pools: PoolConfig = field(default_factory=PoolConfig)
    train: TrainRunConfig = field(default_factory=TrainRunConfig)
    scheme: tuple = (2, 1, 1)
    fold: int = 0
    data_seed: int = 0

    def to_dict(self):
        return {"generator": self.generator.to_dict(), "disturbance": asdict(self.disturbance),
                "pools": asdict(self.pools), "train": self.train.to_dict(),
                "scheme": list(self.scheme), "fold": self.fold, "data_seed": self.data_seed}


def build_pools(intervals, fold, pools: PoolConfig, seed):
    """Level-balanced segmented pools for the train/val/test groups of ``fold``."""
    pools.validate()
    ss = np.random.SeedSequence(seed)
    seeds = [int(s.generate_state(1)[0]) for s in ss.spawn(3)]
    out = []
    for groups, n, s in zip((fold.train, fold.val, fold.test),
                            (pools.per_level_train, pools.per_level_val, pools.per_level_test), seeds):
        members = [iv for iv in intervals if iv.group_id in groups]
        if not members:
            out.append([])
            continue
        pool = sample_intervals_per_level(members, n, pools.interval_len, s, pools.N_l)
        out.append(segment_pool(pool, pools.window_len, pools.stride))
    return tuple(out)


def run_experiment(cfg: ExperimentConfig, intervals=None, callback=None):
    """Generate (unless given), disturb, pool, train and evaluate one fold."""
    if intervals is None:
        intervals = generate_mvd(cfg.generator, cfg.data_seed)
    disturbed = disturb_dataset(intervals, cfg.disturbance)
    plan = make_splits(sorted({iv.group_id for iv in disturbed}), cfg.scheme)
    if not 0 <= cfg.fold < len(plan.folds):
        raise ConfigError(f"fold {cfg.fold} out of range 0..{len(plan.folds) - 1}", "fold")
    fold = plan.folds[cfg.fold]
    train_seqs, val_seqs, test_seqs = build_pools(disturbed, fold, cfg.pools, cfg.data_seed)
    cfg.train.encoder.n_features = cfg.generator.n_features
    cfg.train.encoder.window_len = cfg.pools.window_len
    result = train(cfg.train, train_seqs, val_seqs, cfg.generator.n_classes, callback=callback)
    report, bundles = evaluate(result.model, test_seqs, cfg.generator.n_classes)
    report.label_recovery = harmonization_report(result)
    return {"result": result, "report": report, "bundles": bundles, "fold": fold,
            "test_seqs": test_seqs, "val_seqs": val_seqs}
