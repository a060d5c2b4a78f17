"""Domain types shared across the pipeline.

All types are immutable after construction; arrays are float32 and validated
at ingest (finiteness included), so downstream stages never re-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteValue


def _check_finite(name: str, array: np.ndarray) -> None:
    if not np.isfinite(array).all():
        index = tuple(int(i) for i in np.argwhere(~np.isfinite(array))[0])
        raise NonFiniteValue(name, index)


@dataclass(frozen=True, eq=False)
class VideoFeatures:
    """Per-frame encoder outputs for one video.

    patch_tokens: (T, N, d) float32, patch features per frame.
    cls_tokens:   (T, L_enc, d) float32, per-layer summary tokens per frame;
                  layer 0 is the shallowest stored layer.
    """

    patch_tokens: np.ndarray
    cls_tokens: np.ndarray

    def __post_init__(self):
        for name, array, ndim in (("patch_tokens", self.patch_tokens, 3),
                                  ("cls_tokens", self.cls_tokens, 3)):
            if array.ndim != ndim:
                raise ValueError(f"{name} must have {ndim} axes, got {array.ndim}")
            if array.dtype != np.float32:
                raise ValueError(f"{name} must be float32, got {array.dtype}")
            if min(array.shape) < 1:
                raise ValueError(f"{name} has an empty axis: {array.shape}")
        if self.cls_tokens.shape[0] != self.patch_tokens.shape[0]:
            raise ValueError("patch_tokens and cls_tokens disagree on frame count")
        if self.cls_tokens.shape[2] != self.patch_tokens.shape[2]:
            raise ValueError("patch_tokens and cls_tokens disagree on dimension")
        _check_finite("patch_tokens", self.patch_tokens)
        _check_finite("cls_tokens", self.cls_tokens)

    @property
    def num_frames(self) -> int:
        return self.patch_tokens.shape[0]

    @property
    def num_patches(self) -> int:
        return self.patch_tokens.shape[1]

    @property
    def dim(self) -> int:
        return self.patch_tokens.shape[2]

    @property
    def num_encoder_layers(self) -> int:
        return self.cls_tokens.shape[1]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.num_frames, self.num_patches, self.dim,
                self.num_encoder_layers)

    def truncated(self, num_frames: int) -> "VideoFeatures":
        """First ``num_frames`` frames as a view-backed copy of this object."""
        if num_frames == self.num_frames:
            return self
        if not 1 <= num_frames <= self.num_frames:
            raise ValueError(f"cannot keep {num_frames} of {self.num_frames} frames")
        return VideoFeatures(self.patch_tokens[:num_frames],
                             self.cls_tokens[:num_frames])


@dataclass(frozen=True, eq=False)
class Token:
    """One feature vector plus the count of originals it stands for."""

    vector: np.ndarray  # (d,) float32
    weight: int = 1
    provenance: tuple[tuple[int, int], ...] | None = None  # (frame, patch) pairs

    def __post_init__(self):
        if self.vector.ndim != 1:
            raise ValueError("token vector must be one-dimensional")
        if self.vector.dtype != np.float32:
            raise ValueError(f"token vector must be float32, got {self.vector.dtype}")
        if self.weight < 1:
            raise ValueError("token weight must be at least 1")
        if self.provenance is not None and len(self.provenance) != self.weight:
            raise ValueError("provenance length must equal weight")


@dataclass(frozen=True, eq=False)
class SegmentFeature:
    """The compact tokens one segment reduces to."""

    segment_index: int
    tokens: tuple[Token, ...]

    @property
    def vectors(self) -> np.ndarray:
        return np.stack([t.vector for t in self.tokens])

    @property
    def weights(self) -> np.ndarray:
        return np.asarray([t.weight for t in self.tokens], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class GlobalFeature:
    """Temporally averaged per-layer summary tokens, shallowest layer first."""

    vectors: np.ndarray  # (E, d) float32
    layer_indices: tuple[int, ...]  # stored-layer index of each row

    def __post_init__(self):
        if self.vectors.ndim != 2:
            raise ValueError("global vectors must be (E, d)")
        if len(self.layer_indices) != self.vectors.shape[0]:
            raise ValueError("layer_indices length must match row count")

    @property
    def num_tokens(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True, eq=False)
class VideoRepresentation:
    """Final ordered token sequence: global block plus per-segment blocks."""

    global_feature: GlobalFeature
    segments: tuple[SegmentFeature, ...]
    order: str  # "gl" or "lg"
    flattened: np.ndarray = field(repr=False)  # (E + M*S, d) float32

    @property
    def num_tokens(self) -> int:
        return self.flattened.shape[0]

    @property
    def dim(self) -> int:
        return self.flattened.shape[1]
