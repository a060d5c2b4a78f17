"""scikit-learn style facade over the compression pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .config import MergeConfig, validate_config
from .pipeline import CompressionResult, compress_video
from .types import VideoFeatures


class VideoTokenCompressor(BaseEstimator, TransformerMixin):
    """Compress a long video's patch tokens into a short ordered sequence.

    The transformer is stateless in the learned sense: ``fit`` only validates
    the configuration against a video's shape and binds derived attributes,
    so the estimator composes with sklearn tooling (``get_params``,
    ``set_params``, ``clone``, pipelines) while ``transform`` does the work.

    Parameters
    ----------
    num_segments : int, default 10
        Number of contiguous short-term segments (S).
    tokens_per_segment : int, default 30
        Compact token count each segment reduces to (M).
    global_layers : int, default 5
        How many of the deepest stored encoder layers feed the global block (E).
    similarity_heads : int, default 16
        Channel groups for the head-averaged cosine (C); must divide d.
    partition : {"alternating", "random"}, default "alternating"
        How each merge step splits tokens into source and destination sets.
    partition_seed : int, default 0
        Stream seed for the random partition rule.
    schedule : {"halving", "fixed"}, default "halving"
        Merge schedule family.
    fixed_step : int, default 1
        Tokens removed per step under the fixed schedule.
    assembly_order : {"gl", "lg"}, default "gl"
        Global-then-local or local-then-global output order.
    weighting : {"size", "plain"}, default "size"
        Average absorbed tokens by accumulated weight or uniformly.
    truncate : bool, default False
        Drop trailing frames when S does not divide the frame count.
    threads : int, default 1
        Worker threads for per-segment merging; output is thread-count
        independent.
    """

    def __init__(self, num_segments=10, tokens_per_segment=30, global_layers=5,
                 similarity_heads=16, partition="alternating", partition_seed=0,
                 schedule="halving", fixed_step=1, assembly_order="gl",
                 weighting="size", truncate=False, threads=1):
        self.num_segments = num_segments
        self.tokens_per_segment = tokens_per_segment
        self.global_layers = global_layers
        self.similarity_heads = similarity_heads
        self.partition = partition
        self.partition_seed = partition_seed
        self.schedule = schedule
        self.fixed_step = fixed_step
        self.assembly_order = assembly_order
        self.weighting = weighting
        self.truncate = truncate
        self.threads = threads

    def _config(self) -> MergeConfig:
        return MergeConfig(
            num_segments=self.num_segments,
            tokens_per_segment=self.tokens_per_segment,
            num_global_layers=self.global_layers,
            similarity_heads=self.similarity_heads,
            partition=self.partition,
            partition_seed=self.partition_seed,
            schedule=self.schedule,
            fixed_step=self.fixed_step,
            assembly_order=self.assembly_order,
            weighting=self.weighting,
            truncate=self.truncate,
        )

    @staticmethod
    def _check_input(X) -> VideoFeatures:
        if not isinstance(X, VideoFeatures):
            raise TypeError(
                f"expected VideoFeatures, got {type(X).__name__}; build one "
                "from arrays or read an LVFT container")
        return X

    def fit(self, X, y=None):
        """Validate the configuration against ``X`` and bind derived shapes."""
        features = self._check_input(X)
        bound = validate_config(self._config(), features.shape)
        self.frames_per_segment_ = bound.frames_per_segment
        self.output_tokens_ = bound.output_tokens
        self.feature_dim_ = features.dim
        return self

    def transform(self, X) -> np.ndarray:
        """Compress ``X``; returns the (E + M*S, d) float32 token array."""
        if not hasattr(self, "output_tokens_"):
            raise NotFittedError("call fit (or fit_transform) before transform")
        return self.compress(X).representation.flattened

    def compress(self, X) -> CompressionResult:
        """Full pipeline output: representation, merge plans, and metrics."""
        features = self._check_input(X)
        return compress_video(features, self._config(), threads=self.threads)
