"""Full classifier: contextual encoder plus independent and pairwise heads."""
from __future__ import annotations

import numpy as np

from ..autodiff import Module
from ..coherence import PredictionBundle, aggregate_context, constrain_behavior
from .encoder import ContextEncoder, EncoderConfig
from .heads import IndependentHead, PairHead


class CoherentClassifier(Module):
    def __init__(self, cfg: EncoderConfig, n_classes, seed=0):
        rng = np.random.default_rng(seed)
        self.n_classes = n_classes
        self.encoder = ContextEncoder(cfg, rng)
        self.head = IndependentHead(cfg.d, n_classes, rng)
        self.pair = PairHead(cfg.d, rng)

    def __call__(self, segments, rng=None):
        """Return ``(p_hat, R_hat)`` tensors for a (B, L, w, F) batch."""
        c = self.encoder(segments, rng)
        return self.head(c), self.pair(c)

    def predict(self, segments, ids=None, batch_size=32):
        """Inference-mode bundles (no tape kept) for a stack of intervals."""
        segments = np.asarray(segments)
        was = self.training
        self.eval()
        out = []
        try:
            for lo in range(0, len(segments), batch_size):
                chunk = segments[lo:lo + batch_size]
                p_hat, R_hat = self(chunk)
                p_tilde = aggregate_context(R_hat.data, p_hat.data)
                p_bar, params = constrain_behavior(p_tilde)
                for i in range(len(chunk)):
                    iid = lo + i if ids is None else ids[lo + i]
                    out.append(PredictionBundle(iid, p_hat.data[i], R_hat.data[i], p_tilde[i],
                                                p_bar[i], params[i]))
        finally:
            self.train(was)
        return out
