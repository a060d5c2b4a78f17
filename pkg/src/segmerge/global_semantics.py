"""Temporal averaging of per-layer summary tokens into the global feature."""

from __future__ import annotations

import numpy as np

from .errors import ETooLarge
from .types import GlobalFeature, VideoFeatures


def aggregate_global(features: VideoFeatures, num_layers: int) -> GlobalFeature:
    """Mean over frames of the deepest ``num_layers`` stored summary tokens.

    Row e is the arithmetic mean over t of cls_tokens[t, L_enc - E + e]
    (shallowest selected layer first), accumulated in float64 and rounded to
    float32 on output. Frame order does not affect the result.
    """
    stored = features.num_encoder_layers
    if num_layers > stored:
        raise ETooLarge(f"{num_layers} layers requested, features store {stored}")
    if num_layers < 1:
        raise ValueError("num_layers must be positive")
    first = stored - num_layers
    selected = features.cls_tokens[:, first:, :].astype(np.float64)
    means = selected.mean(axis=0).astype(np.float32)
    return GlobalFeature(vectors=means,
                         layer_indices=tuple(range(first, stored)))
