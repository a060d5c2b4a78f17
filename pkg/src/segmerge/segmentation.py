"""Split a video's patch tokens into contiguous equal-length segments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import MergeConfig, validate_config
from .types import Token, VideoFeatures


@dataclass(frozen=True, eq=False)
class SegmentView:
    """Read-only projection of one segment's K*N patch tokens.

    Tokens are ordered by (frame, patch); vectors is a zero-copy view into the
    source features whenever layout allows.
    """

    segment_index: int
    frame_range: range
    vectors: np.ndarray  # (K*N, d) float32
    provenance: np.ndarray  # (K*N, 2) int64 rows of (frame, patch)

    @property
    def token_count(self) -> int:
        return self.vectors.shape[0]

    @property
    def tokens(self) -> list[Token]:
        return [
            Token(vector=self.vectors[i], weight=1,
                  provenance=((int(self.provenance[i, 0]),
                               int(self.provenance[i, 1])),))
            for i in range(self.token_count)
        ]


def segment_video(features: VideoFeatures,
                  config: MergeConfig) -> list[SegmentView]:
    """All S segment views, ascending, covering frames [0, S*K).

    Concatenating the views' provenance reproduces (frame, patch)
    lexicographic order over the covered frames.
    """
    if config.frames_per_segment is None:
        config = validate_config(config, features.shape)
    k = config.frames_per_segment
    n = features.num_patches
    views = []
    for s in range(config.num_segments):
        frames = range(s * k, (s + 1) * k)
        block = features.patch_tokens[frames.start:frames.stop]
        provenance = np.empty((k * n, 2), dtype=np.int64)
        provenance[:, 0] = np.repeat(np.arange(frames.start, frames.stop), n)
        provenance[:, 1] = np.tile(np.arange(n), k)
        views.append(SegmentView(
            segment_index=s,
            frame_range=frames,
            vectors=block.reshape(k * n, features.dim),
            provenance=provenance,
        ))
    return views
