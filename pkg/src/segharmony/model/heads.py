"""Classifier heads: independent per-segment classes and pairwise same-class scores."""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import Linear, Module, parameter


class IndependentHead(Module):
    """``softmax(MLP(c))`` with one hidden layer d -> d/2 -> C."""

    def __init__(self, d, n_classes, rng):
        self.hidden = Linear(d, max(d // 2, 1), rng)
        self.out = Linear(max(d // 2, 1), n_classes, rng)

    def __call__(self, c):
        return ad.softmax_rows(self.out(ad.relu(self.hidden(c))))


class PairHead(Module):
    """Same-class probability for every ordered pair of segments.

    The first layer acts on ``c_i || c_j``; its weight is split into the rows
    that multiply ``c_i`` and those that multiply ``c_j`` so the L^2 pair
    features are formed by broadcasting instead of materialising the concatenation.
    Channel 0 is "different class", channel 1 is "same class".
    """

    def __init__(self, d, rng):
        h = max(d // 2, 1)
        self.d = d
        self.w1 = parameter(ad.glorot(rng, 2 * d, h))
        self.b1 = parameter(np.zeros(h))
        self.out = Linear(h, 2, rng)

    def __call__(self, c):
        B, L, d = c.shape
        left = c @ self.w1[:d]
        right = c @ self.w1[d:]
        h = ad.reshape(left, (B, L, 1, -1)) + ad.reshape(right, (B, 1, L, -1)) + self.b1
        return ad.softmax_rows(self.out(ad.relu(h)))
