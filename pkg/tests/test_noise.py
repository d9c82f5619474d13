import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpvote import (
    NoiseSpec,
    RngStream,
    exceedance_probability_mc,
    gaussian_tail_bound,
    laplace_tail,
    required_constant_gaussian,
    required_constant_laplace,
    sample_gaussian,
    sample_laplace,
    union_flip_bound,
)

N = 100_000


class TestRngStream:
    def test_same_stream_same_sequence(self):
        a = sample_laplace(2.0, RngStream(42, (3,)), size=16)
        b = sample_laplace(2.0, RngStream(42, (3,)), size=16)
        assert np.array_equal(a, b)

    def test_substreams_differ(self):
        a = sample_laplace(2.0, RngStream(42).substream(0), size=16)
        b = sample_laplace(2.0, RngStream(42).substream(1), size=16)
        assert not np.array_equal(a, b)

    def test_substream_extends_path(self):
        s = RngStream(7).substream(1, 2).substream(3)
        assert s.path == (1, 2, 3)

    def test_rejects_negative_path(self):
        with pytest.raises(ValueError):
            RngStream(7, (-1,))


class TestSampleLaplace:
    def test_empirical_median_centered(self):
        x = sample_laplace(3.0, RngStream(1), size=N)
        assert abs(np.median(x)) <= 0.02 * 3.0

    def test_empirical_absolute_mean_is_scale(self):
        x = sample_laplace(3.0, RngStream(2), size=N)
        assert np.mean(np.abs(x)) == pytest.approx(3.0, rel=0.03)

    def test_empirical_tail_at_one_scale(self):
        x = sample_laplace(1.5, RngStream(3), size=N)
        assert np.mean(np.abs(x) >= 1.5) == pytest.approx(math.exp(-1), abs=0.01)

    def test_scalar_draw(self):
        assert isinstance(sample_laplace(1.0, RngStream(4)), float)

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            sample_laplace(0.0, RngStream(5))


class TestSampleGaussian:
    def test_empirical_std(self):
        x = sample_gaussian(2.5, RngStream(6), size=N)
        assert np.std(x) == pytest.approx(2.5, rel=0.02)

    def test_empirical_mean(self):
        x = sample_gaussian(2.5, RngStream(7), size=N)
        assert abs(np.mean(x)) <= 0.02 * 2.5

    def test_two_sided_five_percent_quantile(self):
        x = sample_gaussian(1.0, RngStream(8), size=N)
        assert np.mean(np.abs(x) >= 1.96) == pytest.approx(0.05, abs=0.01)


class TestLaplaceTail:
    def test_closed_form_values(self):
        assert laplace_tail(2.0, 0.5) == pytest.approx(math.exp(-1), rel=1e-12)
        assert laplace_tail(math.log(4), 1.0) == pytest.approx(0.25, rel=1e-12)

    def test_zero_threshold(self):
        assert laplace_tail(0.0, 3.0) == 1.0


class TestGaussianTailBound:
    def test_formula(self):
        assert gaussian_tail_bound(2.0, 1.0) == pytest.approx(2 * math.exp(-2), rel=1e-12)

    def test_clamped_at_zero_threshold(self):
        assert gaussian_tail_bound(0.0, 1.0) == 1.0

    def test_scale_invariance(self):
        assert gaussian_tail_bound(4.0, 2.0) == pytest.approx(gaussian_tail_bound(2.0, 1.0), rel=1e-12)


class TestUnionFlipBound:
    def test_laplace_inverts_required_constant(self):
        c = required_constant_laplace(10, 1e-6, 0.01)
        spec = NoiseSpec("laplace", gamma=0.01)
        assert union_flip_bound(10, spec, c) == pytest.approx(1e-6, rel=1e-9)

    def test_single_class_reduces_to_tail(self):
        spec = NoiseSpec("laplace", gamma=0.5)
        assert union_flip_bound(1, spec, 2.0) == pytest.approx(laplace_tail(2.0, 0.5), rel=1e-12)

    def test_gaussian_inverts_required_constant(self):
        c = required_constant_gaussian(10, 1e-6, 1.0)
        spec = NoiseSpec("gaussian", sigma=1.0)
        assert union_flip_bound(10, spec, c) == pytest.approx(1e-6, rel=1e-9)


class TestRequiredConstants:
    def test_laplace_value(self):
        assert required_constant_laplace(10, 1e-6, 0.01) == pytest.approx(100 * math.log(1e7), rel=1e-12)
        assert required_constant_laplace(10, 1e-6, 0.01) == pytest.approx(1611.8096, rel=1e-6)

    def test_laplace_round_trip(self):
        c0 = 37.5
        tau = 10 * math.exp(-0.2 * c0)
        assert required_constant_laplace(10, tau, 0.2) == pytest.approx(c0, rel=1e-12)

    def test_laplace_unit_case(self):
        assert required_constant_laplace(2, 2 / math.e, 1.0) == pytest.approx(1.0, rel=1e-12)

    def test_gaussian_value(self):
        expected = math.sqrt(2 * math.log(2e7))
        assert required_constant_gaussian(10, 1e-6, 1.0) == pytest.approx(expected, rel=1e-12)
        assert required_constant_gaussian(10, 1e-6, 1.0) == pytest.approx(5.7985, rel=1e-4)

    def test_gaussian_linear_in_sigma(self):
        one = required_constant_gaussian(10, 1e-4, 1.0)
        assert required_constant_gaussian(10, 1e-4, 3.0) == pytest.approx(3 * one, rel=1e-12)

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.1])
    def test_rejects_bad_tau(self, tau):
        with pytest.raises(ValueError):
            required_constant_laplace(10, tau, 1.0)


class TestNoiseSpec:
    def test_laplace_scale(self):
        assert NoiseSpec("laplace", gamma=0.5, sensitivity=2.0).scale == 4.0

    def test_gaussian_scale(self):
        assert NoiseSpec("gaussian", sigma=3.0, sensitivity=2.0).scale == 6.0

    @pytest.mark.parametrize("kwargs", [
        dict(kind="laplace"),
        dict(kind="laplace", gamma=0.5, sigma=1.0),
        dict(kind="gaussian"),
        dict(kind="gaussian", sigma=-1.0),
        dict(kind="cauchy", gamma=1.0),
    ])
    def test_rejects_bad_specs(self, kwargs):
        with pytest.raises(ValueError):
            NoiseSpec(**kwargs)


class TestExceedanceAgainstUnionBound:
    def test_laplace_grid(self):
        stream = RngStream(90)
        cases = [(2, 0.5, 0.02), (5, 1.0, 0.01), (10, 2.0, 0.005), (16, 0.25, 0.01)]
        for i, (num_classes, gamma, tau) in enumerate(cases):
            spec = NoiseSpec("laplace", gamma=gamma)
            c = required_constant_laplace(num_classes, tau, gamma)
            est = exceedance_probability_mc(spec, num_classes, c, N, stream.substream(i))
            bound = union_flip_bound(num_classes, spec, c)
            assert est.estimate <= bound + 3 * est.standard_error

    def test_gaussian_grid(self):
        stream = RngStream(91)
        for i, (num_classes, ratio) in enumerate([(3, 1.5), (10, 2.0), (12, 3.0)]):
            spec = NoiseSpec("gaussian", sigma=2.0)
            c = ratio * spec.scale
            est = exceedance_probability_mc(spec, num_classes, c, N, stream.substream(i))
            assert est.estimate <= union_flip_bound(num_classes, spec, c)


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_probability_outputs_in_unit_interval(threshold, gamma):
    assert 0.0 <= laplace_tail(threshold, gamma) <= 1.0
    assert 0.0 <= gaussian_tail_bound(threshold, gamma) <= 1.0
    spec = NoiseSpec("laplace", gamma=gamma)
    assert 0.0 <= union_flip_bound(7, spec, threshold) <= 1.0
