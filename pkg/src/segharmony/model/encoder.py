"""Segment embedder, positional table and the stacked contextual encoder."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Linear, Module, parameter
from ..errors import CapacityError, ConfigError
from .attention import GATE_MODES, ConAttention


@dataclass
class EncoderConfig:
    n_features: int = 2
    window_len: int = 16
    d: int = 32
    d_ffn: int = 64
    n_heads: int = 4
    n_layers: int = 2
    conv_channels: tuple = (16, 16, 32)
    conv_kernels: tuple = (3, 3, 3)
    conv_strides: tuple = (1, 1, 1)
    dropout: float = 0.3
    sigma_floor: float = 0.1
    max_len: int = 64
    gate_mode: str = "learned"

    def validate(self):
        for key in ("n_features", "window_len", "d", "d_ffn", "n_heads", "n_layers", "max_len"):
            if getattr(self, key) < 1:
                raise ConfigError("must be positive", key)
        if self.d % self.n_heads:
            raise ConfigError(f"d={self.d} not divisible by n_heads={self.n_heads}", "n_heads")
        if not (len(self.conv_channels) == len(self.conv_kernels) == len(self.conv_strides) == 3):
            raise ConfigError("three convolution stages required", "conv_channels")
        if min(self.conv_channels) < 1 or min(self.conv_kernels) < 1 or min(self.conv_strides) < 1:
            raise ConfigError("convolution sizes must be positive", "conv_channels")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)", "dropout")
        if self.sigma_floor <= 0:
            raise ConfigError("sigma floor must be positive", "sigma_floor")
        if self.gate_mode not in GATE_MODES:
            raise ConfigError(f"gate_mode must be one of {GATE_MODES}", "gate_mode")
        t = self.window_len
        for k, s in zip(self.conv_kernels, self.conv_strides):
            t = (t - k) // s + 1
            if t < 1:
                raise ConfigError(f"window_len {self.window_len} shorter than the convolution "
                                  "receptive field", "window_len")
        return self

    def to_dict(self):
        d = asdict(self)
        for key in ("conv_channels", "conv_kernels", "conv_strides"):
            d[key] = list(d[key])
        return d


class SegmentEncoder(Module):
    """Three 1-D convolutions over time, ReLU after each, mean-pooled and projected to ``d``."""

    def __init__(self, cfg: EncoderConfig, rng):
        self.kernels = tuple(cfg.conv_kernels)
        self.strides = tuple(cfg.conv_strides)
        chans = (cfg.n_features,) + tuple(cfg.conv_channels)
        self.convs = [Linear(chans[i] * self.kernels[i], chans[i + 1], rng) for i in range(3)]
        self.proj = Linear(chans[-1], cfg.d, rng)

    def __call__(self, x):
        """(N, w, F) -> (N, d)."""
        h = x
        for conv, k, s in zip(self.convs, self.kernels, self.strides):
            h = ad.relu(conv(ad.unfold1d(h, k, s)))
        return self.proj(ad.mean(h, axis=1))


class ContextEncoder(Module):
    def __init__(self, cfg: EncoderConfig, rng):
        cfg.validate()
        self.cfg = cfg
        self.segment = SegmentEncoder(cfg, rng)
        self.pos = parameter(rng.normal(0.0, 0.02, size=(cfg.max_len, cfg.d)))
        self.layers = [ConAttention(cfg.d, cfg.n_heads, cfg.d_ffn, rng, cfg.sigma_floor,
                                    cfg.dropout, cfg.gate_mode) for _ in range(cfg.n_layers)]
        self.ln_g = parameter(np.ones(cfg.d))
        self.ln_b = parameter(np.zeros(cfg.d))

    def embed(self, segments):
        """(B, L, w, F) -> (B, L, d) segment embeddings without position information."""
        x = segments if isinstance(segments, ad.Tensor) else ad.Tensor(segments)
        B, L, w, F = x.shape
        e = self.segment(ad.reshape(x, (B * L, w, F)))
        return ad.reshape(e, (B, L, self.cfg.d))

    def __call__(self, segments, rng=None, trace=False):
        segments = np.asarray(segments.data if isinstance(segments, ad.Tensor) else segments)
        if segments.ndim == 3:
            segments = segments[None]
        B, L = segments.shape[:2]
        if L > self.cfg.max_len:
            raise CapacityError(f"{L} segments exceed max_len={self.cfg.max_len}")
        c = self.embed(segments) + self.pos[:L]
        for i, layer in enumerate(self.layers):
            c = layer(c, rng, trace=trace, name=f"layers/{i}")
        return ad.layer_norm(c, self.ln_g, self.ln_b)
