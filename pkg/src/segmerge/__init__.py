"""Long-video visual token compression via segment-wise bipartite merging."""

from .assembly import (
    CompressionMetrics,
    ProjectionWeights,
    assemble,
    compression_metrics,
    project,
)
from .config import MergeConfig, validate_config
from .errors import (
    BadMagic,
    CNotDividingD,
    ConfigError,
    DimensionMismatch,
    EngineError,
    ETooLarge,
    FormatError,
    InputTooLargeForOracle,
    InvalidHeader,
    MTooLarge,
    NonFiniteValue,
    SNotDividingT,
    TruncatedPayload,
    UnsupportedVersion,
    ZeroNormHead,
)
from .estimator import VideoTokenCompressor
from .formats import (
    read_compressed,
    read_features,
    read_projection,
    write_compressed,
    write_features,
    write_projection,
)
from .global_semantics import aggregate_global
from .merging import (
    MergePlan,
    MergeStep,
    bipartition,
    merge_schedule,
    merge_segment,
    merge_step,
)
from .oracle import ORACLE_MAX_TOKENS, oracle_merge_segment
from .pipeline import CompressionResult, compress_video
from .segmentation import SegmentView, segment_video
from .similarity import head_similarity, pairwise_scores
from .synthetic import SyntheticSpec, generate_synthetic
from .types import (
    GlobalFeature,
    SegmentFeature,
    Token,
    VideoFeatures,
    VideoRepresentation,
)

__version__ = "0.1.0"

__all__ = [
    "CompressionMetrics",
    "CompressionResult",
    "EngineError",
    "GlobalFeature",
    "MergeConfig",
    "MergePlan",
    "MergeStep",
    "ORACLE_MAX_TOKENS",
    "ProjectionWeights",
    "SegmentFeature",
    "SegmentView",
    "SyntheticSpec",
    "Token",
    "VideoFeatures",
    "VideoRepresentation",
    "VideoTokenCompressor",
    "aggregate_global",
    "assemble",
    "bipartition",
    "compress_video",
    "compression_metrics",
    "generate_synthetic",
    "head_similarity",
    "merge_schedule",
    "merge_segment",
    "merge_step",
    "oracle_merge_segment",
    "pairwise_scores",
    "project",
    "read_compressed",
    "read_features",
    "read_projection",
    "segment_video",
    "validate_config",
    "write_compressed",
    "write_features",
    "write_projection",
    "BadMagic",
    "CNotDividingD",
    "ConfigError",
    "DimensionMismatch",
    "ETooLarge",
    "FormatError",
    "InputTooLargeForOracle",
    "InvalidHeader",
    "MTooLarge",
    "NonFiniteValue",
    "SNotDividingT",
    "TruncatedPayload",
    "UnsupportedVersion",
    "ZeroNormHead",
]
