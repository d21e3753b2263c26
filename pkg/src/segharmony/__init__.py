"""Segment classification of long time series with contextual attention and label harmonization."""

__version__ = "0.1.0"
