"""Cubic B-spline prefilter, evaluation, and axis-zoom tests.

The recursive prefilter is checked against an independent oracle that builds
the full interpolation system as a dense matrix and solves it directly: with
mirror-reflect boundary handling, coefficients c must satisfy, at every
integer sample point i,

    sum_k B3(i - k) * c[fold(k)] = x[i]

where the sum runs over the kernel support and fold() reflects out-of-range
indices back into the line. The dense solve shares no code with the filter
under test, including its own fold implementation.
"""

import math

import numpy as np
import pytest

from ctuniform.errors import DomainError
from ctuniform.spline import (
    GAIN,
    POLE,
    SplineLine,
    bspline3,
    eval_cubic,
    prefilter_cubic,
    zoom_array_axis,
    zoom_axis_cubic,
)
from ctuniform.volume import Volume, VoxelUnits


def oracle_fold(k, length):
    """Reflect an index into [0, length-1], written independently."""
    if length == 1:
        return 0
    while k < 0 or k > length - 1:
        if k < 0:
            k = -k
        if k > length - 1:
            k = 2 * (length - 1) - k
    return k


def oracle_kernel(t):
    """Scalar cubic B-spline, cases written out separately from bspline3."""
    a = abs(float(t))
    if a < 1.0:
        return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
    if a < 2.0:
        return ((2.0 - a) ** 3) / 6.0
    return 0.0


def oracle_coefficients(samples):
    """Dense-solve spline coefficients under mirror boundaries."""
    samples = np.asarray(samples, dtype=np.float64)
    length = samples.shape[0]
    system = np.zeros((length, length))
    for i in range(length):
        for k in range(i - 2, i + 3):
            weight = oracle_kernel(i - k)
            if weight != 0.0:
                system[i, oracle_fold(k, length)] += weight
    return np.linalg.solve(system, samples)


class TestKernel:
    def test_knot_values(self):
        # B3(0) = 2/3, B3(+-1) = 1/6, B3(+-2) = 0
        assert bspline3(0.0) == pytest.approx(2.0 / 3.0, abs=1e-15)
        assert bspline3(1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert bspline3(-1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert bspline3(2.0) == 0.0
        assert bspline3(-2.0) == 0.0
        assert bspline3(3.5) == 0.0

    def test_symmetry(self):
        xs = np.linspace(0.0, 2.5, 101)
        np.testing.assert_allclose(bspline3(xs), bspline3(-xs), atol=0.0)

    def test_partition_of_unity(self):
        # the four taps covering any offset in [0, 1) sum to one
        rng = np.random.default_rng(10)
        for _ in range(200):
            frac = float(rng.uniform(0.0, 1.0))
            taps = np.array([frac + 1.0, frac, frac - 1.0, frac - 2.0])
            assert np.sum(bspline3(taps)) == pytest.approx(1.0, abs=1e-12)

    def test_matches_scalar_oracle_on_grid(self):
        xs = np.linspace(-3.0, 3.0, 601)
        expected = np.array([oracle_kernel(x) for x in xs])
        np.testing.assert_allclose(bspline3(xs), expected, atol=1e-15)

    def test_nonnegative_and_bounded(self):
        xs = np.linspace(-4.0, 4.0, 801)
        vals = bspline3(xs)
        assert np.all(vals >= 0.0)
        assert np.max(vals) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_pole_and_gain_constants(self):
        assert POLE == pytest.approx(math.sqrt(3.0) - 2.0, abs=0.0)
        assert GAIN == 6.0


class TestPrefilterAgainstDenseSolve:
    def test_random_lines_many_lengths(self):
        rng = np.random.default_rng(11)
        for length in [2, 3, 4, 5, 7, 8, 13, 21, 34, 64, 100, 177, 300]:
            line = rng.uniform(-1000.0, 400.0, size=length)
            got = prefilter_cubic(line).coefficients
            want = oracle_coefficients(line)
            scale = max(1.0, float(np.max(np.abs(want))))
            assert np.max(np.abs(got - want)) / scale < 1e-8, f"length={length}"

    def test_impulse_lines(self):
        # single-spike inputs exercise the boundary folds hardest
        for length in [2, 3, 5, 9]:
            for pos in range(length):
                line = np.zeros(length)
                line[pos] = 1.0
                got = prefilter_cubic(line).coefficients
                want = oracle_coefficients(line)
                np.testing.assert_allclose(got, want, atol=1e-12)

    def test_constant_line_coefficients_constant(self):
        # a constant is its own spline: B3 taps sum to one
        got = prefilter_cubic(np.full(17, 7.25)).coefficients
        np.testing.assert_allclose(got, np.full(17, 7.25), atol=1e-10)

    def test_linear_ramp_reproduced(self):
        # cubic splines reproduce degree-1 polynomials; under mirror
        # boundaries a ramp's coefficients equal the ramp itself
        line = np.arange(33, dtype=np.float64) * 3.5 - 10.0
        got = prefilter_cubic(line).coefficients
        want = oracle_coefficients(line)
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_linearity(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal(40)
        b = rng.standard_normal(40)
        combined = prefilter_cubic(2.0 * a - 3.0 * b).coefficients
        separate = 2.0 * prefilter_cubic(a).coefficients - 3.0 * prefilter_cubic(b).coefficients
        np.testing.assert_allclose(combined, separate, atol=1e-9)


class TestPrefilterEdges:
    def test_length_one_bypasses_filter(self):
        sl = prefilter_cubic([5.0])
        assert len(sl) == 1
        assert not sl.filtered
        assert sl.coefficients[0] == 5.0

    def test_length_two(self):
        got = prefilter_cubic([1.0, 4.0]).coefficients
        want = oracle_coefficients([1.0, 4.0])
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_rank_2_input_rejected(self):
        with pytest.raises(DomainError):
            prefilter_cubic(np.zeros((3, 3)))

    def test_coefficients_are_float64(self):
        sl = prefilter_cubic(np.arange(5, dtype=np.float32))
        assert sl.coefficients.dtype == np.float64


class TestEvaluation:
    def test_integer_positions_reproduce_samples(self):
        rng = np.random.default_rng(13)
        for length in [2, 3, 6, 20, 51]:
            line = rng.uniform(-500.0, 500.0, size=length)
            sl = prefilter_cubic(line)
            for i in range(length):
                assert eval_cubic(sl, float(i)) == pytest.approx(line[i], abs=1e-8)

    def test_constant_everywhere(self):
        sl = prefilter_cubic(np.full(9, -3.0))
        for x in np.linspace(0.0, 8.0, 33):
            assert eval_cubic(sl, float(x)) == pytest.approx(-3.0, abs=1e-10)

    def test_linear_ramp_deep_interior(self):
        # mirror boundaries bend a ramp near the edges (the reflection has a
        # kink), but the distortion decays geometrically with distance, so
        # the deep interior of a long line reproduces the ramp exactly
        line = 2.0 * np.arange(64, dtype=np.float64) + 1.0
        sl = prefilter_cubic(line)
        for x in np.linspace(20.0, 43.0, 47):
            assert eval_cubic(sl, float(x)) == pytest.approx(2.0 * x + 1.0, abs=1e-8)

    def test_linear_ramp_at_knots(self):
        # at the samples themselves interpolation is exact even at the edges
        line = 2.0 * np.arange(25, dtype=np.float64) + 1.0
        sl = prefilter_cubic(line)
        for x in range(25):
            assert eval_cubic(sl, float(x)) == pytest.approx(2.0 * x + 1.0, abs=1e-8)

    def test_matches_dense_oracle_between_knots(self):
        # evaluate both the filter-under-test and the dense-solve oracle
        # through the same reconstruction sum at fractional positions
        rng = np.random.default_rng(14)
        line = rng.standard_normal(16)
        sl = prefilter_cubic(line)
        oc = oracle_coefficients(line)
        for x in [0.25, 1.5, 7.123, 14.9, 15.0]:
            base = math.floor(x)
            want = 0.0
            for k in range(base - 1, base + 3):
                want += oracle_kernel(x - k) * oc[oracle_fold(k, 16)]
            assert eval_cubic(sl, x) == pytest.approx(want, abs=1e-9)

    def test_out_of_domain_rejected(self):
        sl = prefilter_cubic(np.zeros(5))
        with pytest.raises(DomainError):
            eval_cubic(sl, -0.001)
        with pytest.raises(DomainError):
            eval_cubic(sl, 4.001)

    def test_length_one_line_evaluates_to_its_value(self):
        sl = SplineLine(np.array([2.5]), filtered=False)
        assert eval_cubic(sl, 0.0) == 2.5


class TestZoomArrayAxis:
    def test_identity_zoom_close_to_input(self):
        rng = np.random.default_rng(15)
        arr = rng.uniform(-1000.0, 400.0, size=(6, 5, 40))
        out = zoom_array_axis(arr, 2, 40)
        assert out.shape == arr.shape
        np.testing.assert_allclose(out, arr, atol=1e-6)

    def test_endpoints_exact_alignment(self):
        # output plane 0 is input plane 0; output plane -1 is input plane -1
        rng = np.random.default_rng(16)
        arr = rng.uniform(-1000.0, 400.0, size=(4, 4, 37)).astype(np.float32)
        for target in [2, 3, 17, 64, 121]:
            out = zoom_array_axis(arr, 2, target)
            np.testing.assert_allclose(out[:, :, 0], arr[:, :, 0], atol=1e-4)
            np.testing.assert_allclose(out[:, :, -1], arr[:, :, -1], atol=1e-4)

    def test_constant_array_stays_constant(self):
        arr = np.full((3, 3, 11), 42.0)
        for target in [1, 2, 5, 11, 50]:
            out = zoom_array_axis(arr, 2, target)
            np.testing.assert_allclose(out, 42.0, atol=1e-9)

    def test_upsample_then_integer_positions_match(self):
        # zooming L -> 2L-1 puts every original sample at an even output index
        rng = np.random.default_rng(17)
        arr = rng.standard_normal((2, 3, 9))
        out = zoom_array_axis(arr, 2, 17)
        np.testing.assert_allclose(out[:, :, ::2], arr, atol=1e-9)

    def test_target_one_samples_midpoint(self):
        arr = np.linspace(0.0, 10.0, 11)[None, None, :] * np.ones((2, 2, 1))
        out = zoom_array_axis(arr, 2, 1)
        assert out.shape == (2, 2, 1)
        np.testing.assert_allclose(out[..., 0], 5.0, atol=1e-9)

    def test_length_one_axis_broadcasts(self):
        arr = np.array([[[3.0]], [[4.0]]])
        out = zoom_array_axis(arr, 2, 5)
        assert out.shape == (2, 1, 5)
        np.testing.assert_array_equal(out[0, 0], np.full(5, 3.0))
        np.testing.assert_array_equal(out[1, 0], np.full(5, 4.0))

    def test_zoom_other_axes(self):
        rng = np.random.default_rng(18)
        arr = rng.standard_normal((7, 9, 4))
        out0 = zoom_array_axis(arr, 0, 13)
        assert out0.shape == (13, 9, 4)
        out1 = zoom_array_axis(arr, 1, 5)
        assert out1.shape == (7, 5, 4)
        # axis choice must commute with transposition
        alt = zoom_array_axis(arr.transpose(1, 0, 2), 1, 13).transpose(1, 0, 2)
        np.testing.assert_allclose(out0, alt, atol=1e-12)

    def test_dtype_preserved(self):
        arr32 = np.zeros((2, 2, 8), dtype=np.float32)
        assert zoom_array_axis(arr32, 2, 4).dtype == np.float32
        arr64 = np.zeros((2, 2, 8), dtype=np.float64)
        assert zoom_array_axis(arr64, 2, 4).dtype == np.float64

    def test_float32_identity_zoom_bit_exact(self):
        # same-size zoom evaluates at exact integers; narrowing back to
        # float32 must reproduce the input bit for bit
        rng = np.random.default_rng(19)
        arr = rng.uniform(-1000.0, 400.0, size=(5, 5, 23)).astype(np.float32)
        out = zoom_array_axis(arr, 2, 23)
        np.testing.assert_array_equal(out, arr)

    def test_bad_target_rejected(self):
        with pytest.raises(DomainError):
            zoom_array_axis(np.zeros((2, 2, 4)), 2, 0)

    def test_1d_array_supported(self):
        line = np.sin(np.linspace(0.0, 3.0, 12))
        out = zoom_array_axis(line, 0, 23)
        assert out.shape == (23,)
        np.testing.assert_allclose(out[0], line[0], atol=1e-9)
        np.testing.assert_allclose(out[-1], line[-1], atol=1e-9)


class TestZoomVolume:
    def test_depth_zoom_shape_and_metadata(self):
        rng = np.random.default_rng(20)
        vol = Volume(
            rng.uniform(-200.0, 200.0, size=(6, 7, 30)).astype(np.float32),
            VoxelUnits.NORMALIZED,
            source_id="case7",
        )
        out = zoom_axis_cubic(vol, 12)
        assert out.shape == (6, 7, 12)
        assert out.voxel_units is VoxelUnits.NORMALIZED
        assert out.source_id == "case7"

    def test_matches_array_zoom(self):
        rng = np.random.default_rng(21)
        vol = Volume(rng.standard_normal((4, 4, 19)).astype(np.float32))
        out = zoom_axis_cubic(vol, 8)
        np.testing.assert_array_equal(out.data, zoom_array_axis(vol.data, 2, 8))

    def test_downsample_of_smooth_signal_accurate(self):
        # a band-limited signal survives a 2x depth reduction closely
        z = np.linspace(0.0, 1.0, 101)
        signal = np.sin(2.0 * np.pi * z) + 0.5 * np.cos(3.0 * np.pi * z)
        vol = Volume(np.broadcast_to(signal, (3, 3, 101)).copy())
        out = zoom_axis_cubic(vol, 51)
        want = np.sin(2.0 * np.pi * np.linspace(0.0, 1.0, 51)) + 0.5 * np.cos(
            3.0 * np.pi * np.linspace(0.0, 1.0, 51)
        )
        np.testing.assert_allclose(out.data[1, 1], want, atol=5e-4)
