"""Seeded synthetic feature generation for testing without a real encoder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .rng import SplitMix64, derive
from .types import VideoFeatures

GeneratorKind = Literal["gaussian", "events"]

# Stream tags; part of the documented generation protocol.
_TAG_PATCH = 1
_TAG_CLS = 2
_TAG_PATCH_MEANS = 3
_TAG_CLS_MEANS = 4

_EVENT_NOISE = 0.1  # relative to the unit scale of event means

_CHUNK_PAIRS = 1 << 21  # bounds temporary memory during generation


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape, seed, and generator family for a synthetic video."""

    num_frames: int
    num_patches: int
    dim: int
    num_layers: int
    seed: int = 0
    kind: GeneratorKind = "gaussian"
    num_events: int = 1

    def __post_init__(self):
        for name in ("num_frames", "num_patches", "dim", "num_layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.kind not in ("gaussian", "events"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == "events" and not 1 <= self.num_events <= self.num_frames:
            raise ValueError("num_events must lie in [1, num_frames]")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


def _normals(seed: int, tag: int, n: int) -> np.ndarray:
    """n float64 standard normals from the tagged stream, chunked for memory."""
    stream = SplitMix64(derive(seed, tag))
    out = np.empty(n, dtype=np.float64)
    done = 0
    while done < n:
        take = min(n - done, 2 * _CHUNK_PAIRS)
        out[done:done + take] = stream.normals(take)
        done += take
    return out


def generate_synthetic(spec: SyntheticSpec) -> VideoFeatures:
    """Deterministic features: same spec gives bit-identical arrays.

    gaussian: every value is an independent standard normal.
    events:   [0, T) splits into num_events contiguous blocks (frame t goes to
              block t*num_events // T); all frames in a block share one
              per-block mean vector, with 0.1-sigma per-frame noise on top,
              so tokens within a block are far more alike than across blocks.
    """
    t, n, d, layers = (spec.num_frames, spec.num_patches, spec.dim,
                       spec.num_layers)
    patch_noise = _normals(spec.seed, _TAG_PATCH, t * n * d).reshape(t, n, d)
    cls_noise = _normals(spec.seed, _TAG_CLS, t * layers * d).reshape(t, layers, d)
    if spec.kind == "gaussian":
        patch, cls = patch_noise, cls_noise
    else:
        blocks = (np.arange(t) * spec.num_events) // t
        patch_means = _normals(spec.seed, _TAG_PATCH_MEANS,
                               spec.num_events * d).reshape(spec.num_events, d)
        cls_means = _normals(spec.seed, _TAG_CLS_MEANS,
                             spec.num_events * layers * d
                             ).reshape(spec.num_events, layers, d)
        patch = patch_means[blocks][:, None, :] + _EVENT_NOISE * patch_noise
        cls = cls_means[blocks] + _EVENT_NOISE * cls_noise
    return VideoFeatures(patch.astype(np.float32), cls.astype(np.float32))
