"""Final sequence assembly, optional affine projection, and quality metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .formats import read_projection
from .types import GlobalFeature, SegmentFeature, VideoFeatures, VideoRepresentation


@dataclass(frozen=True, eq=False)
class ProjectionWeights:
    """Row-wise affine map W x + b; identity acts as an exact pass-through."""

    matrix: np.ndarray | None  # (d_out, d) float32, None for identity
    bias: np.ndarray | None  # (d_out,) float32, None for identity
    source: str = "identity"

    @classmethod
    def identity(cls) -> "ProjectionWeights":
        return cls(matrix=None, bias=None, source="identity")

    @classmethod
    def from_file(cls, path: str) -> "ProjectionWeights":
        with open(path, "rb") as handle:
            matrix, bias = read_projection(handle)
        return cls(matrix=matrix, bias=bias, source=path)

    @property
    def is_identity(self) -> bool:
        return self.matrix is None


def assemble(global_feature: GlobalFeature,
             segments: list[SegmentFeature] | tuple[SegmentFeature, ...],
             order: str = "gl") -> VideoRepresentation:
    """Concatenate global and per-segment blocks into one token sequence.

    "gl" puts the global block first then segments in ascending index; "lg"
    moves the global block to the end. Both orders contain the same rows.
    """
    if order not in ("gl", "lg"):
        raise ValueError(f"order must be 'gl' or 'lg', got {order!r}")
    segments = tuple(segments)
    if not segments:
        raise ValueError("at least one segment is required")
    expected = len(segments[0].tokens)
    for position, segment in enumerate(segments):
        if segment.segment_index != segments[0].segment_index + position:
            raise ValueError("segments must be consecutive ascending in index")
        if len(segment.tokens) != expected:
            raise ValueError(
                f"segment {segment.segment_index} holds {len(segment.tokens)} "
                f"tokens, expected {expected}")
    local_rows = np.concatenate([segment.vectors for segment in segments])
    if local_rows.shape[1] != global_feature.vectors.shape[1]:
        raise DimensionMismatch(
            f"global dimension {global_feature.vectors.shape[1]} vs "
            f"local dimension {local_rows.shape[1]}")
    if order == "gl":
        flattened = np.concatenate([global_feature.vectors, local_rows])
    else:
        flattened = np.concatenate([local_rows, global_feature.vectors])
    return VideoRepresentation(global_feature=global_feature,
                               segments=segments, order=order,
                               flattened=flattened)


def project(representation: VideoRepresentation | np.ndarray,
            weights: ProjectionWeights) -> np.ndarray:
    """Apply the affine map to every row; identity returns the rows bit-exactly."""
    rows = (representation.flattened
            if isinstance(representation, VideoRepresentation)
            else representation)
    if weights.is_identity:
        return rows.copy()
    if rows.shape[1] != weights.matrix.shape[1]:
        raise DimensionMismatch(
            f"rows have dimension {rows.shape[1]}, weights expect "
            f"{weights.matrix.shape[1]}")
    projected = (rows.astype(np.float64) @ weights.matrix.astype(np.float64).T
                 + weights.bias.astype(np.float64))
    return projected.astype(np.float32)


@dataclass(frozen=True)
class CompressionMetrics:
    input_tokens: int
    output_tokens: int
    ratio: float
    coverage: float
    conservation_residuals: tuple[float, ...]  # one per segment

    @property
    def max_conservation_residual(self) -> float:
        return max(self.conservation_residuals)


_COVERAGE_CHUNK = 4096


def _unit_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    work = rows.astype(np.float64)
    norms = np.sqrt(np.sum(work * work, axis=1))
    zero = norms == 0.0
    work /= np.where(zero, 1.0, norms)[:, None]
    return work, zero


def compression_metrics(original: VideoFeatures,
                        representation: VideoRepresentation) -> CompressionMetrics:
    """Token counts, compression ratio, coverage, and conservation residuals.

    Coverage is the mean over original patch tokens of the best full-vector
    cosine against any output local token (the fidelity view, deliberately not
    the head-averaged merge score). A zero patch token counts 1.0 when some
    local token is zero too, else 0.0. The conservation residual of segment s
    is |sum(weight * vector) - sum(original vectors)| / |sum(original
    vectors)| in float64 (absolute when the reference sum is zero); it is
    near zero under size weighting only.
    """
    input_tokens = original.num_frames * original.num_patches
    output_tokens = representation.num_tokens
    local_rows = np.concatenate(
        [segment.vectors for segment in representation.segments])
    unit_locals, zero_locals = _unit_rows(local_rows)

    patches = original.patch_tokens.reshape(input_tokens, original.dim)
    best = np.empty(input_tokens, dtype=np.float64)
    for start in range(0, input_tokens, _COVERAGE_CHUNK):
        chunk = patches[start:start + _COVERAGE_CHUNK]
        unit_chunk, zero_chunk = _unit_rows(chunk)
        best[start:start + _COVERAGE_CHUNK] = (unit_chunk @ unit_locals.T).max(axis=1)
        if zero_chunk.any():
            best[start:start + _COVERAGE_CHUNK][zero_chunk] = (
                1.0 if zero_locals.any() else 0.0)
    coverage = float(best.mean())

    residuals = []
    frames_per_segment = None
    for segment in representation.segments:
        weights = segment.weights
        total_weight = int(weights.sum())
        if frames_per_segment is None:
            frames_per_segment = total_weight // original.num_patches
        start = segment.segment_index * frames_per_segment
        stop = start + frames_per_segment
        original_sum = (original.patch_tokens[start:stop]
                        .astype(np.float64).sum(axis=(0, 1)))
        merged_sum = (segment.vectors.astype(np.float64)
                      * weights[:, None]).sum(axis=0)
        reference = float(np.linalg.norm(original_sum))
        gap = float(np.linalg.norm(merged_sum - original_sum))
        residuals.append(gap / reference if reference > 0.0 else gap)

    return CompressionMetrics(
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        ratio=input_tokens / output_tokens,
        coverage=coverage,
        conservation_residuals=tuple(residuals),
    )
