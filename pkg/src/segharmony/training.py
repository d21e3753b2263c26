"""Curriculum training with progressive label harmonization."""
from __future__ import annotations

import copy
import hashlib
import logging
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Adam, backward, config_hash, save_checkpoint
from .coherence import aggregate_context, constrain_behavior, consistency_losses
from .errors import ConfigError, ContractError, TrainingError
from .evaluation import classification_metrics, evaluate_intervals, label_recovery
from .model import CoherentClassifier, EncoderConfig

log = logging.getLogger(__name__)

HISTORY = 5


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------
def eta(e, E_eta):
    """Trust weight on the model's own predictions: rises linearly to 1 over ``E_eta`` epochs."""
    if e < 0:
        raise ContractError("epoch must be >= 0")
    if E_eta == 0:
        return 1.0
    return min(e / E_eta, 1.0)


def omega_n(n):
    """Normalised ``exp(-m / 2)`` weights over the ``n`` most recent epochs (m = 0 newest)."""
    if n < 1:
        raise ContractError("prediction history is empty")
    w = np.exp(-np.arange(n) / 2.0)
    return w / w.sum()


def omega(e):
    """History weights at epoch ``e``: ``exp((e - m) / 2)`` over m in 0..min(4, e), normalised."""
    if e < 0:
        raise ContractError("epoch must be >= 0")
    m = np.arange(min(HISTORY - 1, e) + 1)
    # subtracting e before exponentiating leaves the normalised weights unchanged
    w = np.exp(-m / 2.0)
    return w / w.sum()


def curriculum_active_levels(e, E_g, N_l=5):
    if e < 0:
        raise ContractError("epoch must be >= 0")
    if E_g == 0:
        return set(range(1, N_l + 1))
    return set(range(1, min(N_l, 1 + e // E_g) + 1))


# ---------------------------------------------------------------------------
# label state
# ---------------------------------------------------------------------------
class LabelState:
    """Original labels, current labels and the recent prediction history of each interval."""

    def __init__(self, y0, n_classes):
        self.y0 = np.asarray(y0, dtype=np.int64).copy()  # (N, L)
        self.y0.setflags(write=False)
        self.n_classes = n_classes
        self.y_cur = self.y0.copy()
        self.p_e = np.eye(n_classes)[self.y0]
        self.history = [deque(maxlen=HISTORY) for _ in range(len(self.y0))]
        self.admitted = np.zeros(len(self.y0), dtype=bool)

    @property
    def y0_onehot(self):
        return np.eye(self.n_classes)[self.y0]

    def record(self, idx, p_hat, p_bar):
        for j, i in enumerate(idx):
            self.history[i].appendleft((np.array(p_hat[j]), np.array(p_bar[j])))

    def smoothed(self, i):
        """ω-weighted averages of the recorded (p_hat, p_bar) of interval ``i``."""
        hist = self.history[i]
        if not hist:
            raise ContractError(f"interval {i} is admitted but has no prediction history")
        w = omega_n(len(hist))
        ph = sum(wm * h[0] for wm, h in zip(w, hist))
        pb = sum(wm * h[1] for wm, h in zip(w, hist))
        return ph, pb

    def update(self, eta_value):
        """Apply the label update to every admitted interval; return the number of changed labels."""
        changed = 0
        y0h = self.y0_onehot
        for i in np.flatnonzero(self.admitted):
            ph, pb = self.smoothed(i)
            p = update_rule(y0h[i], ph, pb, eta_value)
            y = np.argmax(p, axis=-1)
            changed += int((y != self.y_cur[i]).sum())
            self.p_e[i] = p
            self.y_cur[i] = y
        return changed


def update_rule(y0, p_hat5, p_bar5, eta_value):
    """``(1 - η) y0 + η ((1 - η/2) p_hat5 + (η/2) p_bar5)``."""
    return (1.0 - eta_value) * np.asarray(y0) + eta_value * (
        (1.0 - eta_value / 2.0) * np.asarray(p_hat5) + (eta_value / 2.0) * np.asarray(p_bar5))


def update_labels(state: LabelState, eta_value):
    state.update(eta_value)
    return state.p_e, state.y_cur


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
@dataclass
class Schedule:
    E_eta: int = 30
    E_g: int = 5
    N_l: int = 5
    epochs: int = 60

    def validate(self):
        if self.E_eta < 0:
            raise ConfigError("must be >= 0", "E_eta")
        if self.E_g < 0:
            raise ConfigError("must be >= 0", "E_g")
        if self.N_l < 1:
            raise ConfigError("must be >= 1", "N_l")
        if self.epochs < 1:
            raise ConfigError("must be >= 1", "epochs")
        return self


@dataclass
class TrainRunConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 16
    seed: int = 0
    harmonize: bool = True
    # "eval": record history from a dropout-free pass after each epoch; "train": reuse the training pass
    history_source: str = "train"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    schedule: Schedule = field(default_factory=Schedule)

    def validate(self):
        if self.lr <= 0:
            raise ConfigError("must be positive", "lr")
        if self.weight_decay < 0:
            raise ConfigError("must be >= 0", "weight_decay")
        if self.batch_size < 1:
            raise ConfigError("must be >= 1", "batch_size")
        if self.history_source not in ("eval", "train"):
            raise ConfigError("must be 'eval' or 'train'", "history_source")
        self.encoder.validate()
        self.schedule.validate()
        return self

    def to_dict(self):
        d = asdict(self)
        d["encoder"] = self.encoder.to_dict()
        return d


@dataclass
class TrainResult:
    model: CoherentClassifier
    state: LabelState
    log: list
    best_epoch: int
    best_val_f1: float
    train_seqs: list
    manifest: dict

    def harmonized_labels(self):
        return self.state.y_cur.copy()


def _stack(seqs):
    L = {s.n_segments for s in seqs}
    if len(L) != 1:
        raise ContractError(f"intervals in a batch must share the segment count, got {sorted(L)}")
    return np.stack([s.segments for s in seqs])


def _digest(arrays):
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def predict_labels(model, seqs, batch_size=32):
    bundles = model.predict(_stack(seqs), ids=[s.interval_id for s in seqs], batch_size=batch_size)
    return bundles, [b.labels for b in bundles]


def _record(state, idx, p_hat, R_hat):
    p_bar, _ = constrain_behavior(aggregate_context(R_hat, p_hat))
    state.record(idx, p_hat, p_bar)


def train(cfg: TrainRunConfig, train_seqs, val_seqs, n_classes, checkpoint_path=None, callback=None):
    """Train on ``train_seqs`` with curriculum and harmonization; keep the best validation epoch.

    Validation labels are used for model selection only and never modified.
    """
    cfg.validate()
    sched = cfg.schedule
    if not train_seqs:
        raise ConfigError("no training intervals", "train")
    rng = np.random.default_rng(cfg.seed)
    model = CoherentClassifier(cfg.encoder, n_classes, seed=cfg.seed)
    named = model.named_parameters()
    opt = Adam(named, lr=cfg.lr, weight_decay=cfg.weight_decay)
    X = _stack(train_seqs)
    state = LabelState([s.seg_labels for s in train_seqs], n_classes)
    levels = np.array([s.level for s in train_seqs])
    val_y = [s.seg_labels for s in val_seqs]
    guard = _digest(val_y + [s.clean_seg_labels for s in train_seqs + val_seqs
                             if s.clean_seg_labels is not None])

    best = (-1.0, -1, None)
    history = []
    for e in range(sched.epochs):
        active = curriculum_active_levels(e, sched.E_g, sched.N_l)
        pool = np.flatnonzero(np.isin(levels, sorted(active)))
        state.admitted[pool] = True
        order = rng.permutation(pool)
        losses = []
        model.train()
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            p_hat, R_hat = model(X[idx], rng)
            l1, l2, loss = consistency_losses(p_hat, R_hat, state.y_cur[idx], n_classes)
            if not np.isfinite(loss.item()):
                raise TrainingError(f"non-finite loss at epoch {e}: l1={l1.item()} l2={l2.item()}")
            backward(loss, list(named.values()))
            opt.step()
            if cfg.history_source == "train":
                _record(state, idx, p_hat.data, R_hat.data)
            losses.append((loss.item(), l1.item(), l2.item(), len(idx)))
        if cfg.history_source == "eval" and len(pool):
            model.eval()
            for lo in range(0, len(pool), 4 * cfg.batch_size):
                idx = pool[lo:lo + 4 * cfg.batch_size]
                p_hat, R_hat = model(X[idx])
                _record(state, idx, p_hat.data, R_hat.data)
        eta_e = eta(e, sched.E_eta) if cfg.harmonize else 0.0
        changed = state.update(eta_e) if eta_e > 0 else 0

        entry = {"epoch": e, "eta": eta_e, "levels": sorted(active), "n_admitted": int(len(pool)),
                 "label_changes": changed}
        if losses:
            w = np.array([n for *_, n in losses], dtype=np.float64)
            arr = np.array([x[:3] for x in losses])
            entry.update(loss=float(w @ arr[:, 0] / w.sum()), l1=float(w @ arr[:, 1] / w.sum()),
                         l2=float(w @ arr[:, 2] / w.sum()))
        if val_seqs:
            _, val_pred = predict_labels(model, val_seqs)
            _, _, f1 = classification_metrics(np.concatenate(val_pred), np.concatenate(val_y), n_classes)
            entry["val_macro_f1"] = f1
            if f1 > best[0]:
                best = (f1, e, model.state_dict())
        if callback is not None:
            callback(e, model, state, entry)
        history.append(entry)
        log.info("epoch %d %s", e, entry)

    if _digest(val_y + [s.clean_seg_labels for s in train_seqs + val_seqs
                        if s.clean_seg_labels is not None]) != guard:
        raise TrainingError("validation or clean labels were modified during training")
    if best[2] is not None:
        model.load_state_dict(best[2])
    else:
        best = (float("nan"), sched.epochs - 1, None)
    manifest = {
        "config_hash": config_hash(cfg.to_dict()),
        "config": cfg.to_dict(),
        "n_classes": int(n_classes),
        "epoch": best[1],
        "best_val_macro_f1": best[0],
        "rng_state": rng.bit_generator.state,
        "optimizer_step": opt.step_count,
    }
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, model.state_dict(), manifest)
    return TrainResult(model, state, history, best[1], best[0], train_seqs, manifest)


def evaluate(model, seqs, n_classes, tol=2, use_clean=True):
    """Metrics of the final coherent predictions against clean (default) or working labels."""
    bundles, pred = predict_labels(model, seqs)
    truth = [s.clean_seg_labels if use_clean and s.clean_seg_labels is not None else s.seg_labels
             for s in seqs]
    return evaluate_intervals(pred, truth, n_classes, tol), bundles


def harmonization_report(result: TrainResult):
    seqs = result.train_seqs
    if any(s.clean_seg_labels is None for s in seqs):
        return None
    return label_recovery(result.state.y_cur, result.state.y0,
                          np.stack([s.clean_seg_labels for s in seqs]))


def clone_config(cfg: TrainRunConfig, **changes):
    new = copy.deepcopy(cfg)
    for k, v in changes.items():
        if hasattr(new.schedule, k):
            setattr(new.schedule, k, v)
        elif hasattr(new.encoder, k):
            setattr(new.encoder, k, v)
        else:
            setattr(new, k, v)
    return new
