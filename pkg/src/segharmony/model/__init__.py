from .attention import ConAttention, gaussian_weights
from .encoder import ContextEncoder, EncoderConfig, SegmentEncoder
from .heads import IndependentHead, PairHead
from .network import CoherentClassifier

__all__ = ["ConAttention", "gaussian_weights", "ContextEncoder", "EncoderConfig",
           "SegmentEncoder", "IndependentHead", "PairHead", "CoherentClassifier"]
