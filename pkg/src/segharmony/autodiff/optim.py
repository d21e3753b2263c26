"""Adaptive-moment optimizer with decoupled weight decay."""
from __future__ import annotations

import numpy as np

from ..errors import ContractError, TrainingError


class Adam:
    """Bias-corrected adaptive-moment updates with decoupled weight decay.

    ``params`` is a mapping ``name -> Tensor``; moment buffers are keyed by
    the same names so the state can be checkpointed.
    """

    def __init__(self, params, lr=1e-3, weight_decay=1e-4, betas=(0.9, 0.999), eps=1e-8):
        if lr <= 0:
            raise ContractError(f"learning rate must be positive, got {lr}")
        if weight_decay < 0:
            raise ContractError(f"weight decay must be non-negative, got {weight_decay}")
        self.params = dict(params)
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.beta1, self.beta2 = betas
        self.eps = float(eps)
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = np.zeros_like(p.data)

    def step(self, grads=None):
        if grads is None:
            grads = {k: p.grad for k, p in self.params.items()}
        for name, g in grads.items():
            if g is not None and not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for parameter {name!r}")
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** t
        c2 = 1.0 - b2 ** t
        for name, p in self.params.items():
            g = grads.get(name)
            if g is None:
                g = np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise ContractError(f"gradient shape {g.shape} != parameter shape {p.data.shape} for {name!r}")
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_dict(self):
        return {"lr": self.lr, "weight_decay": self.weight_decay, "step": self.step_count,
                "m": {k: v.copy() for k, v in self.m.items()},
                "v": {k: v.copy() for k, v in self.v.items()}}
