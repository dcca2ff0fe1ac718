"""Recurrence correctness against closed forms and the unrolled-kernel oracle."""

import math

import numpy as np
import pytest

from toposcan.scan_order import GridShape, build_cross_indices, build_topoa_indices
from toposcan.ssm import (
    FeatureMap,
    SsmParams,
    default_params,
    discretize,
    multi_direction_scan,
    passthrough_params,
    scan_sequence,
)


def unrolled_kernel_oracle(x, params):
    """Brute-force y[t] = sum_{s<=t} c . (a_bar^(t-s) * b_bar) x[s] + d x[t]."""
    a_bar, b_bar = discretize(params)
    T = len(x)
    y = np.zeros(T)
    for t in range(T):
        acc = 0.0
        for s in range(t + 1):
            acc += float(params.c @ (a_bar ** (t - s) * b_bar)) * x[s]
        y[t] = acc + params.d * x[t]
    return y


class TestDiscretize:
    def test_small_step_approaches_identity(self):
        params = SsmParams(a=[-1.0], b=[1.0], c=[1.0], d=0.0, delta=1e-8)
        a_bar, b_bar = discretize(params)
        assert abs(a_bar[0] - 1.0) < 1e-6
        assert abs(b_bar[0]) < 1e-6

    def test_closed_form_ln2(self):
        params = SsmParams(a=[-1.0], b=[1.0], c=[1.0], d=0.0, delta=math.log(2.0))
        a_bar, b_bar = discretize(params)
        assert a_bar[0] == pytest.approx(0.5, rel=1e-14)
        assert b_bar[0] == pytest.approx(0.5, rel=1e-14)

    def test_closed_form_general(self):
        params = SsmParams(a=[-2.0], b=[3.0], c=[1.0], d=0.0, delta=1.0)
        a_bar, b_bar = discretize(params)
        assert a_bar[0] == pytest.approx(math.exp(-2.0), rel=1e-14)
        assert b_bar[0] == pytest.approx(3.0 * (math.exp(-2.0) - 1.0) / -2.0, rel=1e-14)

    def test_params_reject_nonnegative_a(self):
        with pytest.raises(ValueError):
            SsmParams(a=[0.0], b=[1.0], c=[1.0], d=0.0, delta=0.1)
        with pytest.raises(ValueError):
            SsmParams(a=[0.5], b=[1.0], c=[1.0], d=0.0, delta=0.1)

    def test_params_reject_bad_delta(self):
        with pytest.raises(ValueError):
            SsmParams(a=[-1.0], b=[1.0], c=[1.0], d=0.0, delta=0.0)


class TestScanSequence:
    def test_zero_input_zero_output(self):
        y = scan_sequence(np.zeros(16), default_params())
        assert np.array_equal(y, np.zeros(16))

    def test_impulse_response_closed_form(self):
        params = default_params()
        a_bar, b_bar = discretize(params)
        x = np.zeros(10)
        x[0] = 1.0
        y = scan_sequence(x, params)
        expected = np.array(
            [float(params.c @ (a_bar**t * b_bar)) for t in range(10)]
        )
        expected[0] += params.d
        np.testing.assert_allclose(y, expected, rtol=1e-12)

    def test_matches_unrolled_kernel(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(1, 9))
            params = SsmParams(
                a=-rng.uniform(0.1, 3.0, n),
                b=rng.standard_normal(n),
                c=rng.standard_normal(n),
                d=float(rng.standard_normal()),
                delta=float(rng.uniform(0.01, 0.5)),
            )
            x = rng.standard_normal(int(rng.integers(1, 65)))
            y = scan_sequence(x, params)
            oracle = unrolled_kernel_oracle(x, params)
            np.testing.assert_allclose(y, oracle, rtol=1e-10, atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(11)
        params = default_params()
        x, z = rng.standard_normal((2, 48))
        alpha, beta = 0.7, -1.3
        combined = scan_sequence(alpha * x + beta * z, params)
        separate = alpha * scan_sequence(x, params) + beta * scan_sequence(z, params)
        np.testing.assert_allclose(combined, separate, rtol=1e-12, atol=1e-14)

    def test_scaling_input_scales_output(self):
        rng = np.random.default_rng(3)
        params = default_params()
        x = rng.standard_normal(32)
        np.testing.assert_allclose(
            scan_sequence(2.0 * x, params), 2.0 * scan_sequence(x, params), rtol=1e-13
        )

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            scan_sequence(np.array([1.0, np.nan]), default_params())

    def test_rejects_non_1d(self):
        with pytest.raises(ValueError):
            scan_sequence(np.zeros((2, 3)), default_params())


class TestMultiDirectionScan:
    def test_passthrough_returns_four_times_input(self):
        rng = np.random.default_rng(5)
        shape = GridShape(6, 7)
        fm = FeatureMap(data=rng.standard_normal((2, 3, shape.length)), shape=shape)
        for indices in (build_topoa_indices(shape), build_cross_indices(shape)):
            out = multi_direction_scan(fm, indices, passthrough_params())
            assert np.array_equal(out.data, 4.0 * fm.data)

    def test_single_pixel_grid(self):
        shape = GridShape(1, 1)
        fm = FeatureMap(data=np.full((1, 2, 1), 1.5), shape=shape)
        params = default_params()
        out = multi_direction_scan(fm, build_topoa_indices(shape), params)
        expected = 4.0 * scan_sequence(np.array([1.5]), params)[0]
        np.testing.assert_allclose(out.data, expected, rtol=1e-14)

    def test_directions_are_genuinely_different(self):
        rng = np.random.default_rng(9)
        shape = GridShape(5, 8)
        fm = FeatureMap(data=rng.standard_normal((1, 2, shape.length)), shape=shape)
        params = default_params()
        topoa = multi_direction_scan(fm, build_topoa_indices(shape), params)
        cross = multi_direction_scan(fm, build_cross_indices(shape), params)
        assert not np.allclose(topoa.data, cross.data)

    def test_shape_mismatch_rejected(self):
        fm = FeatureMap(data=np.zeros((1, 1, 6)), shape=GridShape(2, 3))
        with pytest.raises(ValueError):
            multi_direction_scan(fm, build_topoa_indices(GridShape(3, 3)), default_params())

    def test_batched_channels_match_independent_sequences_bitwise(self):
        # Per-(batch, channel) scans are independent: running them through
        # the batched path must equal one-at-a-time scans exactly.
        rng = np.random.default_rng(13)
        shape = GridShape(4, 6)
        params = default_params()
        fm = FeatureMap(data=rng.standard_normal((2, 3, shape.length)), shape=shape)
        indices = build_topoa_indices(shape)
        out = multi_direction_scan(fm, indices, params)
        for b in range(fm.batch):
            for c in range(fm.channels):
                acc = None
                for k in range(4):
                    gathered = fm.data[b, c, indices.forward[k]]
                    restored = scan_sequence(gathered, params)[indices.inverse[k]]
                    acc = restored if acc is None else acc + restored
                assert np.array_equal(out.data[b, c], acc)


class TestFeatureMap:
    def test_round_trip_grid_layout(self):
        rng = np.random.default_rng(2)
        grid = rng.standard_normal((2, 3, 4, 5))
        fm = FeatureMap.from_grid(grid)
        assert fm.shape == GridShape(4, 5)
        assert np.array_equal(fm.to_grid(), grid)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            FeatureMap(data=np.array([[[np.inf]]]), shape=GridShape(1, 1))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            FeatureMap(data=np.zeros((1, 1, 5)), shape=GridShape(2, 3))
