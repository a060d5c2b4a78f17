import numpy as np
import pytest

from segmerge.rng import SplitMix64, derive
from segmerge.segmentation import SegmentView
from segmerge.types import VideoFeatures


def view_from_array(vectors: np.ndarray, segment_index: int = 0) -> SegmentView:
    """Wrap an (R, d) float32 array as a single-frame segment view."""
    count = vectors.shape[0]
    provenance = np.empty((count, 2), dtype=np.int64)
    provenance[:, 0] = 0
    provenance[:, 1] = np.arange(count)
    return SegmentView(segment_index=segment_index, frame_range=range(0, 1),
                       vectors=np.ascontiguousarray(vectors, dtype=np.float32),
                       provenance=provenance)


def random_view(seed: int, count: int, dim: int,
                segment_index: int = 0) -> SegmentView:
    stream = SplitMix64(derive(seed, 1000))
    values = stream.normals(count * dim).reshape(count, dim)
    return view_from_array(values.astype(np.float32), segment_index)


def small_features(seed: int = 0, frames: int = 6, patches: int = 4,
                   dim: int = 8, layers: int = 3) -> VideoFeatures:
    stream = SplitMix64(derive(seed, 2000))
    patch = stream.normals(frames * patches * dim).reshape(
        frames, patches, dim).astype(np.float32)
    cls = stream.normals(frames * layers * dim).reshape(
        frames, layers, dim).astype(np.float32)
    return VideoFeatures(patch, cls)


@pytest.fixture
def tiny_features() -> VideoFeatures:
    return small_features()
