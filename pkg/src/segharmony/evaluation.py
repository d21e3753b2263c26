"""Classification metrics, change-point scoring, label recovery and the information-gain demo."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ContractError


@dataclass
class MetricsReport:
    accuracy: float
    macro_f1: float
    per_class_f1: list
    c_score: float = float("nan")
    positive_f1: float | None = None
    label_recovery: dict | None = None
    counts: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def confusion_matrix(pred, true, n_classes=None):
    pred = np.asarray(pred, dtype=np.int64).ravel()
    true = np.asarray(true, dtype=np.int64).ravel()
    if pred.shape != true.shape:
        raise ContractError(f"length mismatch: {pred.size} predictions vs {true.size} labels")
    if pred.size == 0:
        raise ContractError("empty input")
    if n_classes is None:
        n_classes = int(max(pred.max(), true.max())) + 1
    if pred.min() < 0 or true.min() < 0 or max(pred.max(), true.max()) >= n_classes:
        raise ContractError("labels out of range")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (true, pred), 1)
    return cm


def classification_metrics(pred, true, n_classes=None):
    """Return ``(accuracy, per_class_f1, macro_f1)``.

    Per-class F1 is ``2 TP / (2 TP + FP + FN)``, defined as 0 when the class
    never occurs in either vector.
    """
    cm = confusion_matrix(pred, true, n_classes)
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    f1 = np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)
    acc = float(tp.sum() / cm.sum())
    return acc, f1.tolist(), float(f1.mean())


def change_points(labels):
    """1-based indices i with ``labels[i] != labels[i+1]``."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ContractError("empty label sequence")
    return [int(i) + 1 for i in np.flatnonzero(labels[1:] != labels[:-1])]


def match_change_points(pred_cp, true_cp, tol):
    """Greedy one-to-one matching: closest pairs first, ties by position."""
    pairs = sorted((abs(p - t), t, p) for p in pred_cp for t in true_cp if abs(p - t) <= tol)
    used_p, used_t, matched = set(), set(), 0
    for _, t, p in pairs:
        if p in used_p or t in used_t:
            continue
        used_p.add(p)
        used_t.add(t)
        matched += 1
    return matched


def c_score_sets(pred_cp, true_cp, tol=2):
    if tol < 0:
        raise ContractError("tolerance must be >= 0")
    pred_cp, true_cp = list(pred_cp), list(true_cp)
    if not pred_cp and not true_cp:
        return 1.0
    if not pred_cp or not true_cp:
        return 0.0
    m = match_change_points(pred_cp, true_cp, tol)
    if m == 0:
        return 0.0
    precision, recall = m / len(pred_cp), m / len(true_cp)
    return 2 * precision * recall / (precision + recall)


def c_score(pred, true, tol=2):
    """Tolerance-windowed change-point F1 between two label sequences."""
    return c_score_sets(change_points(pred), change_points(true), tol)


def label_recovery(y_harmonized, y_disturbed, y_clean):
    """Restored fraction of disturbed labels and corrupted fraction of clean ones."""
    h = np.asarray(y_harmonized).ravel()
    d = np.asarray(y_disturbed).ravel()
    c = np.asarray(y_clean).ravel()
    if not (h.shape == d.shape == c.shape):
        raise ContractError("label vectors must have equal length")
    wrong = d != c
    right = ~wrong
    n_wrong, n_right = int(wrong.sum()), int(right.sum())
    restored = int((h[wrong] == c[wrong]).sum())
    corrupted = int((h[right] != c[right]).sum())
    return {
        "recovery": restored / n_wrong if n_wrong else 1.0,
        "corruption": corrupted / n_right if n_right else 0.0,
        "n_disturbed": n_wrong,
        "n_restored": restored,
        "n_corrupted": corrupted,
        "agreement_disturbed": float((d == c).mean()) if c.size else 1.0,
        "agreement_harmonized": float((h == c).mean()) if c.size else 1.0,
    }


def evaluate_intervals(pred_seqs, true_seqs, n_classes, tol=2):
    """Pool segment-level metrics over intervals; C-score is averaged per interval."""
    pred = np.concatenate([np.asarray(p).ravel() for p in pred_seqs])
    true = np.concatenate([np.asarray(t).ravel() for t in true_seqs])
    acc, per_class, macro = classification_metrics(pred, true, n_classes)
    cs = float(np.mean([c_score(p, t, tol) for p, t in zip(pred_seqs, true_seqs)]))
    positive = per_class[1] if n_classes == 2 else None
    return MetricsReport(acc, macro, per_class, cs, positive,
                         counts={"segments": int(pred.size), "intervals": len(pred_seqs)})


def summarize_reports(reports):
    """Mean and standard deviation of each scalar metric over folds."""
    keys = ("accuracy", "macro_f1", "c_score")
    out = {}
    for k in keys:
        vals = np.array([getattr(r, k) if isinstance(r, MetricsReport) else r[k] for r in reports])
        out[k] = {"mean": float(vals.mean()), "std": float(vals.std(ddof=0)), "folds": vals.tolist()}
    return out


# ---------------------------------------------------------------------------
# information gain of context
# ---------------------------------------------------------------------------
@dataclass
class DiscreteJoint:
    """Probability table indexed as ``table[y, x, x_ctx]``."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if t.ndim != 3:
            raise ContractError("joint table must be 3-D (y, x, x_ctx)")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ContractError("joint table must be finite and non-negative")
        if abs(t.sum() - 1.0) > 1e-12:
            raise ContractError(f"joint table sums to {t.sum()!r}, not 1")
        self.table = t


def _mutual_information(pxy):
    """I(A;B) in bits for a 2-D joint table, by explicit summation over outcomes."""
    pa = pxy.sum(axis=1)
    pb = pxy.sum(axis=0)
    total = 0.0
    for i in range(pxy.shape[0]):
        for j in range(pxy.shape[1]):
            p = pxy[i, j]
            if p > 0:
                total += p * np.log2(p / (pa[i] * pb[j]))
    return total


def mi_gain(joint):
    """Return ``(I(y; x), I(y; x, x_ctx), gain)`` in bits."""
    if not isinstance(joint, DiscreteJoint):
        joint = DiscreteJoint(joint)
    t = joint.table
    ny = t.shape[0]
    i_x = _mutual_information(t.sum(axis=2))
    i_xa = _mutual_information(t.reshape(ny, -1))
    return i_x, i_xa, i_xa - i_x


def conditional_mi(joint):
    """I(y; x_ctx | x) in bits, summed directly from the conditional form."""
    if not isinstance(joint, DiscreteJoint):
        joint = DiscreteJoint(joint)
    t = joint.table
    px = t.sum(axis=(0, 2))
    total = 0.0
    for j in range(t.shape[1]):
        if px[j] <= 0:
            continue
        cond = t[:, j, :] / px[j]
        total += px[j] * _mutual_information(cond)
    return total


def example_joints():
    """Bundled tables: saturated, context-only, independent and a noisy-context case."""
    out = {}
    # y = x, uniform binary; context is an independent fair coin
    t = np.zeros((2, 2, 2))
    for y in range(2):
        for a in range(2):
            t[y, y, a] = 0.25
    out["saturated"] = t
    # y independent of x, context copies y
    t = np.zeros((2, 2, 2))
    for y in range(2):
        for x in range(2):
            t[y, x, y] = 0.25
    out["context_copies_label"] = t
    out["independent"] = np.full((2, 2, 2), 1 / 8)
    # x is a 80%-reliable view of y, context a 70%-reliable independent view
    t = np.zeros((2, 2, 2))
    for y in range(2):
        for x in range(2):
            for a in range(2):
                t[y, x, a] = 0.5 * (0.8 if x == y else 0.2) * (0.7 if a == y else 0.3)
    out["noisy_views"] = t
    return out
