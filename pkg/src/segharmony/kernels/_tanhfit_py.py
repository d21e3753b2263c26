"""Pure numpy implementation of the batched Tanh curve fitter.

Mirrors ``_tanhfit.pyx`` step for step; used when the compiled extension is
unavailable or ``SEGHARMONY_PURE_PYTHON=1``.
"""
from __future__ import annotations

import numpy as np

BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


def abscissa(length):
    return np.arange(1, length + 1, dtype=np.float64) - (length // 2)


def initial_params(s):
    """(N, L) rescaled values -> (N, 4) starting [a, k, b, h]."""
    n, length = s.shape
    di = np.diff(s, axis=1)
    j = np.argmax(np.abs(di), axis=1)  # first maximum, 0-based
    step = di[np.arange(n), j]
    params = np.empty((n, 4))
    params[:, 0] = 1.0
    params[:, 1] = np.abs(step) * np.sign(step)
    params[:, 2] = -((j + 1) - (length // 2) + 0.5)
    params[:, 3] = 0.0
    return params


def _loss_and_grad(p, x, s):
    a, k, b, h = p[:, 0:1], p[:, 1:2], p[:, 2:3], p[:, 3:4]
    u = x + b
    t = np.tanh(k * u)
    r = a * t + h - s
    n = s.shape[1]
    loss = (r * r).sum(axis=1) / n
    sech2 = 1.0 - t * t
    c = 2.0 / n
    g = np.empty_like(p)
    g[:, 0] = c * (r * t).sum(axis=1)
    g[:, 1] = c * (r * a * sech2 * u).sum(axis=1)
    g[:, 2] = c * (r * a * sech2 * k).sum(axis=1)
    g[:, 3] = c * r.sum(axis=1)
    return loss, g


def fit_tanh_batch(seqs, lr=0.1, max_iter=100, tol=1e-6):
    """Fit ``a*tanh(k*(x+b))+h`` to each row of ``seqs`` (values in [0, 1]).

    Returns ``(params[N,4], curves[N,L], iters[N], converged[N])``; curves are
    mapped back to [0, 1] and clamped.
    """
    seqs = np.ascontiguousarray(seqs, dtype=np.float64)
    if seqs.ndim != 2:
        raise ValueError("seqs must be 2-D (N, L)")
    n, length = seqs.shape
    iters = np.zeros(n, dtype=np.int64)
    converged = np.zeros(n, dtype=bool)
    if length < 2:
        params = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
        return params, seqs.copy(), iters, converged

    s = 2.0 * seqs - 1.0
    x = abscissa(length)[None, :]
    p = initial_params(s)
    # A flat row has no jump to anchor the curve on; its exact fit is a=0, h=s.
    flat = np.all(s == s[:, :1], axis=1)
    p[flat, 0] = 0.0
    p[flat, 3] = s[flat, 0]
    converged |= flat
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    loss, g = _loss_and_grad(p, x, s)
    prev = np.full(n, np.inf)
    active = ~flat

    for _ in range(max_iter):
        done = np.abs(prev - loss) < tol
        converged |= active & done
        active &= ~done
        if not active.any():
            break
        idx = np.flatnonzero(active)
        iters[idx] += 1
        t = iters[idx][:, None].astype(np.float64)
        gi = g[idx]
        m[idx] = BETA1 * m[idx] + (1.0 - BETA1) * gi
        v[idx] = BETA2 * v[idx] + (1.0 - BETA2) * gi * gi
        mhat = m[idx] / (1.0 - BETA1 ** t)
        vhat = v[idx] / (1.0 - BETA2 ** t)
        p[idx] -= lr * mhat / (np.sqrt(vhat) + ADAM_EPS)
        prev[idx] = loss[idx]
        new_loss, new_g = _loss_and_grad(p[idx], x, s[idx])
        loss[idx] = new_loss
        g[idx] = new_g
    else:
        converged |= active & (np.abs(prev - loss) < tol)

    f = p[:, 0:1] * np.tanh(p[:, 1:2] * (x + p[:, 2:3])) + p[:, 3:4]
    curves = np.clip((f + 1.0) / 2.0, 0.0, 1.0)
    return p, curves, iters, converged
