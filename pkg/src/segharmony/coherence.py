"""Coherent class prediction: neighbour aggregation, monotone Tanh constraint, final decision."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import DimensionError
from .kernels import fit_tanh_batch

FIT_LR = 0.1
FIT_MAX_ITER = 100
FIT_TOL = 1e-6


@dataclass
class TanhParams:
    a: float
    k: float
    b: float
    h: float
    converged: bool = False
    iterations: int = 0

    def curve(self, length):
        """Fitted values on the [-1, 1] scale at abscissae ``1..L - L // 2``."""
        x = np.arange(1, length + 1) - length // 2
        return self.a * np.tanh(self.k * (x + self.b)) + self.h

    def as_list(self):
        return [self.a, self.k, self.b, self.h]


@dataclass
class PredictionBundle:
    interval_id: int
    p_hat: np.ndarray
    R_hat: np.ndarray
    p_tilde: np.ndarray
    p_bar: np.ndarray
    tanh_params: list = field(default_factory=list)

    @property
    def scores(self):
        return (self.p_hat + self.p_bar) / 2.0

    @property
    def labels(self):
        return infer_final(self.p_hat, self.p_bar)[0]


def same_class_targets(y):
    """One-hot pair targets (..., L, L, 2); channel 1 marks ``y_i == y_j``."""
    y = np.asarray(y)
    same = (y[..., :, None] == y[..., None, :]).astype(np.float64)
    return np.stack([1.0 - same, same], axis=-1)


def consistency_losses(p_hat, R_hat, y, n_classes):
    """Return ``(l1, l2, l1 + l2)``: class cross-entropy and pairwise same-class cross-entropy."""
    y = np.asarray(y, dtype=np.int64)
    onehot = np.eye(n_classes)[y]
    l1 = ad.cross_entropy(p_hat, onehot)
    l2 = ad.cross_entropy(R_hat, same_class_targets(y))
    return l1, l2, l1 + l2


def aggregate_context(R_hat, p_hat):
    """Context-aware predictions from row-normalised same-class weights.

    Works on (L, L, 2) / (L, C) arrays or with a leading batch axis. A row
    whose same-class weights are all zero keeps its own prediction.
    """
    R_hat = np.asarray(R_hat, dtype=np.float64)
    p_hat = np.asarray(p_hat, dtype=np.float64)
    if R_hat.shape[-3] != R_hat.shape[-2] or R_hat.shape[-2] != p_hat.shape[-2]:
        raise DimensionError(f"incompatible shapes {R_hat.shape} and {p_hat.shape}")
    W = R_hat[..., 1].copy()
    rows = W.sum(axis=-1, keepdims=True)
    dead = rows[..., 0] <= 0
    if np.any(dead):
        eye = np.broadcast_to(np.eye(W.shape[-1]), W.shape)
        W[dead] = eye[dead]
        rows = W.sum(axis=-1, keepdims=True)
    return (W / rows) @ p_hat


def fit_tanh_many(seqs, lr=FIT_LR, max_iter=FIT_MAX_ITER, tol=FIT_TOL):
    """Fit every row of ``seqs`` (N, L); returns (list of TanhParams, curves in [0, 1])."""
    seqs = np.atleast_2d(np.asarray(seqs, dtype=np.float64))
    p, curves, iters, conv = fit_tanh_batch(seqs, lr, max_iter, tol)
    params = [TanhParams(*map(float, p[i]), bool(conv[i]), int(iters[i])) for i in range(len(seqs))]
    return params, curves


def fit_tanh(seq, lr=FIT_LR, max_iter=FIT_MAX_ITER, tol=FIT_TOL):
    """Fit ``a*tanh(k*(x+b))+h`` to one sequence of values in [0, 1].

    Values are rescaled to [-1, 1]; ``k`` and ``b`` start from the largest
    adjacent jump, ``a = 1`` and ``h = 0``. Sequences shorter than two points
    are passed through unchanged and flagged as not converged.
    """
    params, curves = fit_tanh_many(np.asarray(seq, dtype=np.float64)[None, :], lr, max_iter, tol)
    return params[0], curves[0]


def _renormalise(p):
    s = p.sum(axis=-1, keepdims=True)
    C = p.shape[-1]
    out = np.where(s > 0, p / np.where(s > 0, s, 1.0), 1.0 / C)
    return out


def constrain_behavior(p_tilde):
    """Fit each class channel independently, then renormalise rows.

    Accepts (L, C) or (B, L, C); returns ``(p_bar, params)`` where ``params``
    is a list over classes (or a list of such lists for batched input).
    """
    p_tilde = np.asarray(p_tilde, dtype=np.float64)
    batched = p_tilde.ndim == 3
    pt = p_tilde if batched else p_tilde[None]
    B, L, C = pt.shape
    seqs = pt.transpose(0, 2, 1).reshape(B * C, L)
    params, curves = fit_tanh_many(seqs)
    p_bar = _renormalise(curves.reshape(B, C, L).transpose(0, 2, 1))
    grouped = [params[b * C:(b + 1) * C] for b in range(B)]
    if batched:
        return p_bar, grouped
    return p_bar[0], grouped[0]


def infer_final(p_hat, p_bar):
    """Average the two predictions; argmax with ties to the lowest class index."""
    p_hat = np.asarray(p_hat, dtype=np.float64)
    p_bar = np.asarray(p_bar, dtype=np.float64)
    if p_hat.shape != p_bar.shape:
        raise DimensionError(f"shape mismatch {p_hat.shape} vs {p_bar.shape}")
    scores = (p_hat + p_bar) / 2.0
    return np.argmax(scores, axis=-1), scores
