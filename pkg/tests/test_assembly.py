import numpy as np
import pytest

from segmerge.assembly import ProjectionWeights, assemble, project
from segmerge.config import MergeConfig
from segmerge.errors import DimensionMismatch
from segmerge.formats import write_projection
from segmerge.pipeline import compress_video
from segmerge.rng import SplitMix64
from segmerge.synthetic import SyntheticSpec, generate_synthetic
from segmerge.types import GlobalFeature, SegmentFeature, Token


def make_global(num_tokens: int, dim: int, fill: float = 1.0) -> GlobalFeature:
    vectors = np.full((num_tokens, dim), fill, dtype=np.float32)
    vectors += np.arange(num_tokens, dtype=np.float32)[:, None]
    return GlobalFeature(vectors=vectors,
                         layer_indices=tuple(range(num_tokens)))


def make_segment(index: int, num_tokens: int, dim: int,
                 offset: float = 100.0) -> SegmentFeature:
    tokens = tuple(
        Token(vector=np.full(dim, offset + index * 10 + m, dtype=np.float32),
              weight=1, provenance=None)
        for m in range(num_tokens)
    )
    return SegmentFeature(segment_index=index, tokens=tokens)


class TestAssemble:
    def test_global_first_layout(self):
        rep = assemble(make_global(2, 3),
                       [make_segment(0, 4, 3), make_segment(1, 4, 3)],
                       order="gl")
        assert rep.flattened.shape == (2 + 8, 3)
        assert np.array_equal(rep.flattened[:2], rep.global_feature.vectors)
        assert np.array_equal(rep.flattened[2:6], rep.segments[0].vectors)
        assert np.array_equal(rep.flattened[6:10], rep.segments[1].vectors)

    def test_minimal_shapes(self):
        rep = assemble(make_global(1, 2), [make_segment(0, 1, 2)], order="gl")
        assert rep.flattened.shape == (2, 2)
        assert np.array_equal(rep.flattened[0], rep.global_feature.vectors[0])

    def test_local_first_is_block_permutation(self):
        global_feature = make_global(2, 3)
        segments = [make_segment(0, 4, 3), make_segment(1, 4, 3)]
        gl = assemble(global_feature, segments, order="gl")
        lg = assemble(global_feature, segments, order="lg")
        assert np.array_equal(lg.flattened[:8], gl.flattened[2:])
        assert np.array_equal(lg.flattened[8:], gl.flattened[:2])
        gl_rows = sorted(row.tobytes() for row in gl.flattened)
        lg_rows = sorted(row.tobytes() for row in lg.flattened)
        assert gl_rows == lg_rows

    def test_segment_size_mismatch_rejected(self):
        with pytest.raises(ValueError):
            assemble(make_global(1, 3),
                     [make_segment(0, 4, 3), make_segment(1, 3, 3)])

    def test_non_consecutive_segments_rejected(self):
        with pytest.raises(ValueError):
            assemble(make_global(1, 3),
                     [make_segment(0, 2, 3), make_segment(2, 2, 3)])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            assemble(make_global(1, 4), [make_segment(0, 2, 3)])

    def test_segment_permutation_equivariance(self):
        """Relabeling segments permutes output blocks; global block is fixed."""
        global_feature = make_global(2, 3)
        segments = [make_segment(i, 3, 3, offset=50.0 * (i + 1))
                    for i in range(3)]
        base = assemble(global_feature, segments, order="gl")
        perm = [2, 0, 1]
        relabeled = [
            SegmentFeature(segment_index=i, tokens=segments[p].tokens)
            for i, p in enumerate(perm)
        ]
        permuted = assemble(global_feature, relabeled, order="gl")
        assert np.array_equal(permuted.flattened[:2], base.flattened[:2])
        for i, p in enumerate(perm):
            got = permuted.flattened[2 + 3 * i: 2 + 3 * (i + 1)]
            expected = base.flattened[2 + 3 * p: 2 + 3 * (p + 1)]
            assert np.array_equal(got, expected)


class TestProject:
    def test_identity_bit_exact(self):
        rep = assemble(make_global(2, 4), [make_segment(0, 3, 4)])
        out = project(rep, ProjectionWeights.identity())
        assert np.array_equal(out, rep.flattened)
        assert out.dtype == np.float32

    def test_doubling_matrix(self):
        rep = assemble(make_global(2, 4), [make_segment(0, 3, 4)])
        weights = ProjectionWeights(matrix=2.0 * np.eye(4, dtype=np.float32),
                                    bias=np.zeros(4, dtype=np.float32),
                                    source="test")
        out = project(rep, weights)
        assert np.array_equal(out, 2.0 * rep.flattened)

    def test_matches_triple_loop_reference(self):
        stream = SplitMix64(21)
        rows = stream.normals(3 * 6).reshape(3, 6).astype(np.float32)
        matrix = stream.normals(4 * 6).reshape(4, 6).astype(np.float32)
        bias = stream.normals(4).astype(np.float32)
        out = project(rows, ProjectionWeights(matrix=matrix, bias=bias,
                                              source="test"))
        reference = np.zeros((3, 4), dtype=np.float64)
        for i in range(3):
            for j in range(4):
                acc = float(bias[j])
                for k in range(6):
                    acc += float(matrix[j, k]) * float(rows[i, k])
                reference[i, j] = acc
        assert np.allclose(out, reference.astype(np.float32), atol=1e-5)
        assert out.shape == (3, 4)

    def test_dimension_mismatch(self):
        rows = np.ones((2, 4), dtype=np.float32)
        weights = ProjectionWeights(matrix=np.ones((3, 5), dtype=np.float32),
                                    bias=np.zeros(3, dtype=np.float32),
                                    source="test")
        with pytest.raises(DimensionMismatch):
            project(rows, weights)

    def test_linearity(self):
        stream = SplitMix64(22)
        x = stream.normals(2 * 4).reshape(2, 4).astype(np.float32)
        y = stream.normals(2 * 4).reshape(2, 4).astype(np.float32)
        matrix = stream.normals(3 * 4).reshape(3, 4).astype(np.float32)
        bias = stream.normals(3).astype(np.float32)
        weights = ProjectionWeights(matrix=matrix, bias=bias, source="test")
        alpha, beta = 0.25, -1.5
        combo = project((alpha * x + beta * y).astype(np.float32), weights)
        parts = (alpha * project(x, weights) + beta * project(y, weights)
                 - (alpha + beta - 1.0) * bias)
        assert np.allclose(combo, parts, atol=1e-5)

    def test_from_file_round_trip(self, tmp_path):
        matrix = np.arange(6, dtype=np.float32).reshape(2, 3)
        bias = np.asarray([0.5, -0.5], dtype=np.float32)
        path = tmp_path / "weights.lvpw"
        with open(path, "wb") as handle:
            write_projection(matrix, bias, handle)
        weights = ProjectionWeights.from_file(str(path))
        assert not weights.is_identity
        assert np.array_equal(weights.matrix, matrix)
        assert np.array_equal(weights.bias, bias)


class TestCompressionMetrics:
    def test_production_shape_ratio(self):
        features = generate_synthetic(SyntheticSpec(100, 256, 8, 5, seed=1))
        config = MergeConfig(similarity_heads=2)
        result = compress_video(features, config)
        metrics = result.metrics
        assert metrics.input_tokens == 25600
        assert metrics.output_tokens == 305
        assert metrics.ratio == pytest.approx(25600 / 305)

    def test_identity_merge_has_unit_coverage(self):
        features = generate_synthetic(SyntheticSpec(4, 3, 8, 1, seed=2))
        config = MergeConfig(num_segments=2, tokens_per_segment=6,
                             num_global_layers=1, similarity_heads=2)
        result = compress_video(features, config)
        assert result.metrics.coverage == pytest.approx(1.0, abs=1e-6)
        assert max(result.metrics.conservation_residuals) < 1e-6

    def test_identical_tokens_cover_perfectly(self):
        patch = np.ones((4, 3, 8), dtype=np.float32)
        cls = np.ones((4, 1, 8), dtype=np.float32)
        from segmerge.types import VideoFeatures

        features = VideoFeatures(patch, cls)
        config = MergeConfig(num_segments=2, tokens_per_segment=2,
                             num_global_layers=1, similarity_heads=2)
        result = compress_video(features, config)
        assert result.metrics.coverage == pytest.approx(1.0, abs=1e-6)
        assert max(result.metrics.conservation_residuals) == 0.0

    def test_plain_weighting_reports_nonzero_residual(self):
        stream = SplitMix64(23)
        patch = stream.normals(4 * 6 * 8).reshape(4, 6, 8).astype(np.float32)
        cls = stream.normals(4 * 1 * 8).reshape(4, 1, 8).astype(np.float32)
        from segmerge.types import VideoFeatures

        features = VideoFeatures(patch, cls)
        config = MergeConfig(num_segments=2, tokens_per_segment=2,
                             num_global_layers=1, similarity_heads=2,
                             weighting="plain")
        result = compress_video(features, config)
        assert max(result.metrics.conservation_residuals) > 1e-3
