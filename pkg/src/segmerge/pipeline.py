"""End-to-end compression: segment, merge, aggregate, assemble."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .assembly import CompressionMetrics, assemble, compression_metrics
from .config import MergeConfig, validate_config
from .global_semantics import aggregate_global
from .merging import MergePlan, merge_segment
from .segmentation import segment_video
from .types import VideoFeatures, VideoRepresentation


@dataclass(frozen=True, eq=False)
class CompressionResult:
    representation: VideoRepresentation
    plans: tuple[MergePlan, ...]
    metrics: CompressionMetrics
    config: MergeConfig  # validated config the run actually used


def compress_video(features: VideoFeatures, config: MergeConfig,
                   threads: int = 1) -> CompressionResult:
    """Run the full pipeline on one video.

    Segments merge independently (in parallel when threads > 1) and are
    gathered in segment order, so the result is identical for any thread
    count. With ``config.truncate`` set, trailing frames beyond S*K are
    dropped before anything runs, so segmentation and the global average see
    the same frames.
    """
    config = validate_config(config, features.shape)
    usable = config.num_segments * config.frames_per_segment
    features = features.truncated(usable)
    views = segment_video(features, config)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            merged = list(pool.map(lambda view: merge_segment(view, config),
                                   views))
    else:
        merged = [merge_segment(view, config) for view in views]
    segments = tuple(feature for feature, _ in merged)
    plans = tuple(plan for _, plan in merged)

    global_feature = aggregate_global(features, config.num_global_layers)
    representation = assemble(global_feature, segments,
                              order=config.assembly_order)
    metrics = compression_metrics(features, representation)
    return CompressionResult(representation=representation, plans=plans,
                             metrics=metrics, config=config)
