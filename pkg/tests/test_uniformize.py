"""Depth-uniformization strategy tests."""

import numpy as np
import pytest

from ctuniform.errors import ConfigError, DomainError
from ctuniform.spline import zoom_array_axis
from ctuniform.uniformize import (
    Method,
    UniformizeSpec,
    ess_indices,
    sss_indices,
    uniformize,
)
from ctuniform.volume import Volume


def random_volume(rng, shape):
    return Volume(rng.uniform(-1000.0, 400.0, size=shape).astype(np.float32))


class TestEssIndices:
    def test_deep_volume_values(self):
        # D=300, N=64: floor(i*300/64)
        idx = ess_indices(300, 64)
        assert idx.shape == (64,)
        np.testing.assert_array_equal(idx, (np.arange(64) * 300) // 64)
        assert idx[0] == 0
        assert idx[-1] == 295

    def test_equal_depth_is_identity(self):
        np.testing.assert_array_equal(ess_indices(64, 64), np.arange(64))

    def test_shallow_volume_repeats_last_plane(self):
        # D=47, N=64: all 47 planes then plane 46 another 17 times
        idx = ess_indices(47, 64)
        assert idx.shape == (64,)
        np.testing.assert_array_equal(idx[:47], np.arange(47))
        np.testing.assert_array_equal(idx[47:], np.full(17, 46))

    def test_indices_always_in_range_and_sorted(self):
        rng = np.random.default_rng(30)
        for _ in range(100):
            depth = int(rng.integers(1, 500))
            target = int(rng.integers(1, 200))
            idx = ess_indices(depth, target)
            assert idx.shape == (target,)
            assert idx.min() >= 0
            assert idx.max() <= depth - 1
            assert np.all(np.diff(idx) >= 0)

    def test_deep_case_covers_span_evenly(self):
        # consecutive strides differ by at most one plane
        idx = ess_indices(437, 64)
        gaps = np.diff(idx)
        assert gaps.min() >= 6
        assert gaps.max() <= 7

    def test_bad_extents_rejected(self):
        with pytest.raises(DomainError):
            ess_indices(0, 64)
        with pytest.raises(DomainError):
            ess_indices(64, 0)


class TestSssIndices:
    def test_deep_volume_blocks(self):
        # D=300, N=64: ceil(64/3)=22 from the front, 21 from the middle,
        # 21 from the back
        idx = sss_indices(300, 64)
        expected = np.concatenate([np.arange(22), 150 + np.arange(21), 279 + np.arange(21)])
        np.testing.assert_array_equal(idx, expected)

    def test_middle_band_never_sampled_on_deep_volumes(self):
        # planes in [105, 135) of a 300-deep volume are invisible to SSS
        idx = set(sss_indices(300, 64).tolist())
        assert idx.isdisjoint(range(105, 135))

    def test_target_divisible_by_three(self):
        idx = sss_indices(90, 30)
        expected = np.concatenate([np.arange(10), 45 + np.arange(10), 80 + np.arange(10)])
        np.testing.assert_array_equal(idx, expected)

    def test_shallow_volume_clamps_and_keeps_duplicates(self):
        idx = sss_indices(5, 12)
        assert idx.shape == (12,)
        assert idx.min() >= 0
        assert idx.max() <= 4

    def test_count_always_exact(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            depth = int(rng.integers(1, 500))
            target = int(rng.integers(1, 200))
            idx = sss_indices(depth, target)
            assert idx.shape == (target,)
            assert idx.min() >= 0
            assert idx.max() <= depth - 1

    def test_block_sizes_sum_to_target(self):
        for target in range(1, 100):
            n_first = -(-target // 3)
            n_middle = target // 3
            n_last = target - n_first - n_middle
            assert n_first + n_middle + n_last == target
            idx = sss_indices(1000, target)
            np.testing.assert_array_equal(idx[:n_first], np.arange(n_first))

    def test_bad_extents_rejected(self):
        with pytest.raises(DomainError):
            sss_indices(0, 10)
        with pytest.raises(DomainError):
            sss_indices(10, 0)


class TestUniformize:
    def test_output_shape_and_provenance(self):
        rng = np.random.default_rng(32)
        vol = random_volume(rng, (20, 18, 90))
        for method in Method:
            spec = UniformizeSpec(method, target_depth=16, target_plane=(12, 10))
            out = uniformize(vol, spec)
            assert out.tensor.shape == (12, 10, 16)
            assert out.tensor.flags["C_CONTIGUOUS"]
            assert out.method is method
            assert out.original_depth == 90

    def test_selection_matches_gather_then_resize(self):
        # selecting planes then resizing in-plane must equal resizing the
        # whole stack first: per-plane resampling is depth-independent
        rng = np.random.default_rng(33)
        vol = random_volume(rng, (16, 14, 50))
        spec = UniformizeSpec(Method.ESS, target_depth=20, target_plane=(8, 8))
        out = uniformize(vol, spec)
        whole = zoom_array_axis(zoom_array_axis(vol.data, 0, 8), 1, 8)
        expected = whole[:, :, ess_indices(50, 20)]
        np.testing.assert_array_equal(out.tensor, expected)

    def test_sss_selection_matches_direct_indexing(self):
        rng = np.random.default_rng(34)
        vol = random_volume(rng, (8, 8, 70))
        spec = UniformizeSpec(Method.SSS, target_depth=15, target_plane=(8, 8))
        out = uniformize(vol, spec)
        np.testing.assert_array_equal(out.tensor, vol.data[:, :, sss_indices(70, 15)])

    def test_siz_identity_depth_skips_depth_zoom(self):
        # equal input and target depth must leave planes untouched
        rng = np.random.default_rng(35)
        vol = random_volume(rng, (6, 6, 24))
        spec = UniformizeSpec(Method.SIZ, target_depth=24, target_plane=(6, 6))
        out = uniformize(vol, spec)
        np.testing.assert_array_equal(out.tensor, vol.data)

    def test_siz_depth_zoom_matches_spline(self):
        rng = np.random.default_rng(36)
        vol = random_volume(rng, (6, 6, 30))
        spec = UniformizeSpec(Method.SIZ, target_depth=12, target_plane=(6, 6))
        out = uniformize(vol, spec)
        np.testing.assert_array_equal(out.tensor, zoom_array_axis(vol.data, 2, 12))

    def test_ess_shallow_pads_with_last_plane(self):
        rng = np.random.default_rng(37)
        vol = random_volume(rng, (5, 5, 7))
        spec = UniformizeSpec(Method.ESS, target_depth=10, target_plane=(5, 5))
        out = uniformize(vol, spec)
        for z in range(7, 10):
            np.testing.assert_array_equal(out.tensor[:, :, z], vol.data[:, :, 6])

    def test_dtype_stays_float32(self):
        rng = np.random.default_rng(38)
        vol = random_volume(rng, (10, 10, 25))
        for method in Method:
            spec = UniformizeSpec(method, target_depth=8, target_plane=(6, 6))
            assert uniformize(vol, spec).tensor.dtype == np.float32

    def test_depth_one_volume(self):
        vol = Volume(np.ones((4, 4, 1), dtype=np.float32) * 7.0)
        for method in Method:
            spec = UniformizeSpec(method, target_depth=5, target_plane=(4, 4))
            out = uniformize(vol, spec)
            assert out.tensor.shape == (4, 4, 5)
            np.testing.assert_allclose(out.tensor, 7.0, atol=1e-5)


class TestUniformizeSpec:
    def test_method_must_be_enum(self):
        with pytest.raises(ConfigError):
            UniformizeSpec("sss")

    def test_bad_depth_rejected(self):
        with pytest.raises(ConfigError):
            UniformizeSpec(Method.SIZ, target_depth=0)

    def test_bad_plane_rejected(self):
        with pytest.raises(ConfigError):
            UniformizeSpec(Method.SIZ, target_plane=(0, 128))
        with pytest.raises(ConfigError):
            UniformizeSpec(Method.SIZ, target_plane=(128,))

    def test_defaults(self):
        spec = UniformizeSpec(Method.SIZ)
        assert spec.target_depth == 64
        assert spec.target_plane == (128, 128)
