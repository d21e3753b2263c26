"""Central finite-difference oracle for gradient checks."""
from __future__ import annotations

import numpy as np

from .tensor import backward


def numeric_grad(fn, params, h=1e-5):
    """Central differences of scalar ``fn()`` w.r.t. every entry of each param."""
    out = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            fp = float(fn().data)
            flat[i] = old - h
            fm = float(fn().data)
            flat[i] = old
            gflat[i] = (fp - fm) / (2 * h)
        out.append(g)
    return out


def check_grads(fn, params, h=1e-5, floor=1e-6):
    """Return the worst relative error between analytic and numeric gradients.

    Relative error is ``|a - n| / max(|a|, |n|, floor)`` per entry; the floor keeps
    entries that are zero up to round-off from dominating.
    """
    backward(fn(), params)
    analytic = [p.grad.copy() for p in params]
    numeric = numeric_grad(fn, params, h)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        err = np.abs(a - n) / denom
        worst = max(worst, float(err.max()) if err.size else 0.0)
    return worst
