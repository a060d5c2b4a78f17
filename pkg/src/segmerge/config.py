"""Pipeline configuration and shape validation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

from .errors import CNotDividingD, ConfigError, ETooLarge, MTooLarge, SNotDividingT

PartitionRule = Literal["alternating", "random"]
ScheduleRule = Literal["halving", "fixed"]
AssemblyOrder = Literal["gl", "lg"]
MergeWeighting = Literal["size", "plain"]

_PARTITIONS = ("alternating", "random")
_SCHEDULES = ("halving", "fixed")
_ORDERS = ("gl", "lg")
_WEIGHTINGS = ("size", "plain")


@dataclass(frozen=True)
class MergeConfig:
    """All pipeline hyperparameters; defaults match the production setting."""

    num_segments: int = 10
    tokens_per_segment: int = 30
    num_global_layers: int = 5
    similarity_heads: int = 16
    partition: PartitionRule = "alternating"
    partition_seed: int = 0
    schedule: ScheduleRule = "halving"
    fixed_step: int = 1  # per-step removal count when schedule == "fixed"
    assembly_order: AssemblyOrder = "gl"
    weighting: MergeWeighting = "size"
    truncate: bool = False
    frames_per_segment: int | None = None  # bound by validate_config

    def __post_init__(self):
        for name in ("num_segments", "tokens_per_segment", "num_global_layers",
                     "similarity_heads", "fixed_step"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.partition not in _PARTITIONS:
            raise ConfigError(f"partition must be one of {_PARTITIONS}")
        if self.schedule not in _SCHEDULES:
            raise ConfigError(f"schedule must be one of {_SCHEDULES}")
        if self.assembly_order not in _ORDERS:
            raise ConfigError(f"assembly_order must be one of {_ORDERS}")
        if self.weighting not in _WEIGHTINGS:
            raise ConfigError(f"weighting must be one of {_WEIGHTINGS}")
        if not 0 <= self.partition_seed < 2 ** 64:
            raise ConfigError("partition_seed must fit in 64 unsigned bits")
        if self.frames_per_segment is not None and self.frames_per_segment < 1:
            raise ConfigError("frames_per_segment must be positive when bound")

    @property
    def output_tokens(self) -> int:
        """Total tokens the pipeline emits: global block plus all segments."""
        return self.num_global_layers + self.tokens_per_segment * self.num_segments


def validate_config(config: MergeConfig,
                    video_shape: tuple[int, int, int, int]) -> MergeConfig:
    """Check ``config`` against a video of shape (T, N, d, L_enc).

    Returns a copy with ``frames_per_segment`` bound to T // S. Rejection is
    total: nothing is silently corrected except the documented truncation of
    trailing frames when ``config.truncate`` is set.
    """
    num_frames, num_patches, dim, num_layers = video_shape
    remainder = num_frames % config.num_segments
    if remainder != 0 and not config.truncate:
        raise SNotDividingT(
            f"{num_frames} frames do not divide into {config.num_segments} segments "
            f"(remainder {remainder}); pass truncate to drop trailing frames"
        )
    frames_per_segment = num_frames // config.num_segments
    if frames_per_segment < 1:
        raise SNotDividingT(
            f"{num_frames} frames cannot fill {config.num_segments} segments"
        )
    if dim % config.similarity_heads != 0:
        raise CNotDividingD(
            f"{config.similarity_heads} heads do not divide dimension {dim}"
        )
    segment_tokens = frames_per_segment * num_patches
    if config.tokens_per_segment > segment_tokens:
        raise MTooLarge(
            f"tokens_per_segment {config.tokens_per_segment} exceeds the "
            f"{segment_tokens} tokens available per segment"
        )
    if config.num_global_layers > num_layers:
        raise ETooLarge(
            f"{config.num_global_layers} global layers requested but features "
            f"store only {num_layers}"
        )
    return replace(config, frames_per_segment=frames_per_segment)
