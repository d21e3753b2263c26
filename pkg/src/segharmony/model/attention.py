"""Two-branch attention: dot-product self-attention and a Gaussian-prior neighbour kernel."""
from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import Linear, Module, parameter
from ..autodiff.tensor import SQRT_2PI
from ..errors import ContractError, NumericError

GATE_MODES = ("learned", "gaussian", "self")


def gaussian_weights(sigma):
    """Row-normalised Gaussian kernel over positions.

    ``sigma`` has shape ``(..., L)`` (one positive scale per row); the result
    has shape ``(..., L, L)`` with ``G[i, j] ∝ exp(-(j-i)^2 / (2 sigma_i^2)) / (sqrt(2 pi) sigma_i)``.
    """
    sigma = sigma if isinstance(sigma, ad.Tensor) else ad.Tensor(sigma)
    if np.any(sigma.data <= 0):
        raise ContractError("gaussian_weights needs strictly positive sigma")
    L = sigma.shape[-1]
    pos = np.arange(L, dtype=np.float64)
    dist2 = (pos[None, :] - pos[:, None]) ** 2
    s = ad.reshape(sigma, sigma.shape + (1,))
    inv = ad.div(1.0, s)
    kern = ad.exp(ad.mul(ad.scale(ad.mul(inv, inv), -0.5), dist2))
    kern = ad.scale(ad.mul(kern, inv), 1.0 / SQRT_2PI)
    return ad.div(kern, ad.tsum(kern, axis=-1, keepdims=True))


class ConAttention(Module):
    """One pre-norm Con-Attention block (attention sub-layer + FFN sub-layer).

    Each head owns a scalar scale head ``w_sigma[:, h]``; the two branch
    outputs are fused per position by additive attention over the pair.
    """

    def __init__(self, d, n_heads, d_ffn, rng, sigma_floor=0.1, dropout=0.0, gate_mode="learned"):
        if d % n_heads:
            raise ContractError(f"hidden dim {d} not divisible by {n_heads} heads")
        if gate_mode not in GATE_MODES:
            raise ContractError(f"gate_mode must be one of {GATE_MODES}")
        self.d, self.n_heads, self.d_head = d, n_heads, d // n_heads
        self.sigma_floor = sigma_floor
        self.dropout = dropout
        self.gate_mode = gate_mode
        self.ln1_g = parameter(np.ones(d))
        self.ln1_b = parameter(np.zeros(d))
        self.w_q = parameter(ad.glorot(rng, d, d))
        self.w_k = parameter(ad.glorot(rng, d, d))
        self.w_vs = parameter(ad.glorot(rng, d, d))
        self.w_vg = parameter(ad.glorot(rng, d, d))
        self.w_sigma = parameter(ad.glorot(rng, d, n_heads))
        self.b_sigma = parameter(np.full(n_heads, 1.0))
        dh = self.d_head
        self.gate_w = parameter(ad.glorot(rng, dh, dh))
        self.gate_u = parameter(np.zeros(dh))
        self.gate_v = parameter(ad.glorot(rng, dh, 1))
        self.w_o = Linear(d, d, rng)
        self.ln2_g = parameter(np.ones(d))
        self.ln2_b = parameter(np.zeros(d))
        self.ffn1 = Linear(d, d_ffn, rng)
        self.ffn2 = Linear(d_ffn, d, rng)
        self._trace = None

    def _heads(self, x):
        B, L, _ = x.shape
        return ad.transpose(ad.reshape(x, (B, L, self.n_heads, self.d_head)), (0, 2, 1, 3))

    def _gate_score(self, z):
        return ad.tanh(z @ self.gate_w + self.gate_u) @ self.gate_v

    def __call__(self, c, rng=None, trace=False, name="con_attention"):
        """``c`` has shape (B, L, d); returns the same shape."""
        B, L, d = c.shape
        train = self.training and rng is not None
        h = ad.layer_norm(c, self.ln1_g, self.ln1_b)
        q, k = self._heads(h @ self.w_q), self._heads(h @ self.w_k)
        vs, vg = self._heads(h @ self.w_vs), self._heads(h @ self.w_vg)
        scores = ad.scale(q @ ad.swap_last(k), 1.0 / np.sqrt(self.d_head))
        S = ad.softmax_rows(scores)
        sigma = ad.softplus(h @ self.w_sigma + self.b_sigma) + self.sigma_floor  # (B, L, H)
        G = gaussian_weights(ad.transpose(sigma, (0, 2, 1)))
        zs, zg = S @ vs, G @ vg
        if self.gate_mode == "learned":
            alpha = ad.softmax_rows(ad.concat([self._gate_score(zs), self._gate_score(zg)], axis=-1))
            z = ad.mul(alpha[..., 0:1], zs) + ad.mul(alpha[..., 1:2], zg)
        elif self.gate_mode == "gaussian":
            alpha = None
            z = zg
        else:
            alpha = None
            z = zs
        merged = ad.reshape(ad.transpose(z, (0, 2, 1, 3)), (B, L, d))
        c1 = c + ad.dropout(self.w_o(merged), self.dropout, rng, train)
        f = self.ffn2(ad.relu(self.ffn1(ad.layer_norm(c1, self.ln2_g, self.ln2_b))))
        out = c1 + ad.dropout(f, self.dropout, rng, train)
        if not np.all(np.isfinite(out.data)):
            raise NumericError(f"non-finite activations in {name}")
        if trace:
            self._trace = {"S": S.data, "G": G.data, "sigma": sigma.data, "z_s": zs.data,
                           "z_g": zg.data, "z": z.data, "v_g": vg.data,
                           "alpha": None if alpha is None else alpha.data}
        return out
