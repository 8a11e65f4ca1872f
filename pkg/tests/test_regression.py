import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from errdens.errors import AllTrimmed, EmptyNeighborhood
from errdens.regression import (
    Sample,
    TrimRegion,
    default_trim,
    g_hat,
    loo_fit,
    nw_estimate,
    nw_loo,
    residuals,
)


def random_sample(rng, n, d):
    return Sample(rng.random((n, d)), rng.standard_normal(n))


class TestSample:
    def test_validation(self):
        with pytest.raises(ValueError):
            Sample(np.zeros((3, 1)), np.zeros(2))
        with pytest.raises(ValueError):
            Sample(np.array([[0.0], [np.nan]]), np.zeros(2))
        s = Sample(np.arange(3.0), np.zeros(3))
        assert (s.n, s.d) == (3, 1)

    def test_trim_region(self):
        t = TrimRegion([0.0, 0.0], [1.0, 1.0])
        assert t.contains([[0.0, 1.0], [0.5, 0.5], [1.0, 1.0 + 1e-12]]).tolist() == [True, True, False]
        with pytest.raises(ValueError):
            TrimRegion([0.0], [0.0])

    def test_default_trim_shrinks_ten_percent(self):
        t = default_trim(np.array([[0.0, 2.0], [10.0, 4.0]]))
        np.testing.assert_allclose(t.lower, [1.0, 2.2])
        np.testing.assert_allclose(t.upper, [9.0, 3.8])


class TestGHat:
    def test_single_point_peak(self):
        s = Sample(np.array([[0.3]]), np.array([1.0]))
        assert g_hat(s, 1.0, 0.3) == 1.5

    def test_outside_reach(self):
        s = Sample(np.array([[0.0], [1.0]]), np.zeros(2))
        assert g_hat(s, 0.5, 0.5) == 0.0

    def test_direct_sum(self, rng):
        s = random_sample(rng, 3, 1)
        x = rng.random()
        assert g_hat(s, 0.8, x) == pytest.approx(oracles.g_hat(s.x.tolist(), 0.8, [x]), rel=1e-12, abs=1e-12)


class TestNW:
    def test_constant_response(self, rng):
        s = Sample(rng.random((40, 2)), np.full(40, 3.25))
        assert nw_estimate(s, 0.5, [0.5, 0.5]) == pytest.approx(3.25, rel=1e-15)

    def test_single_neighbour(self):
        s = Sample(np.array([[0.0], [5.0]]), np.array([7.0, -1.0]))
        assert nw_estimate(s, 0.5, 0.1) == 7.0

    def test_direct_sum(self):
        x = np.array([[0.1], [0.2], [0.35], [0.5], [0.6]])
        y = np.array([1.0, -2.0, 0.5, 3.0, 1.5])
        s = Sample(x, y)
        for pt in (0.2, 0.33, 0.47):
            assert nw_estimate(s, 0.4, pt) == pytest.approx(oracles.nw(x.tolist(), y, 0.4, [pt]), rel=1e-12)

    def test_empty_neighbourhood(self):
        s = Sample(np.array([[0.0], [1.0]]), np.zeros(2))
        with pytest.raises(EmptyNeighborhood):
            nw_estimate(s, 0.5, 0.5)


class TestLeaveOneOut:
    def test_two_points_close(self):
        s = Sample(np.array([[0.0], [0.1]]), np.array([1.0, 2.0]))
        assert nw_loo(s, 1.0, 0) == 2.0

    def test_two_points_far(self):
        s = Sample(np.array([[0.0], [0.5]]), np.array([1.0, 2.0]))
        with pytest.raises(EmptyNeighborhood):
            nw_loo(s, 1.0, 0)

    def test_delete_row_oracle(self, rng):
        s = random_sample(rng, 6, 1)
        for i in range(6):
            assert nw_loo(s, 0.9, i) == pytest.approx(nw_estimate(s.drop(i), 0.9, s.x[i]), rel=1e-12, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 50), st.integers(1, 3), st.floats(0.2, 2.0), st.integers(0, 2**32 - 1))
    def test_delete_row_oracle_random(self, n, d, b0, seed):
        s = random_sample(np.random.default_rng(seed), n, d)
        fits, ok = loo_fit(s, b0)
        for i in range(n):
            ref = oracles.nw(s.x.tolist(), s.y, b0, s.x[i], skip=i)
            if ref is None:
                assert not ok[i]
                with pytest.raises(EmptyNeighborhood):
                    nw_loo(s, b0, i)
            else:
                assert fits[i] == nw_loo(s, b0, i)
                assert fits[i] == pytest.approx(nw_estimate(s.drop(i), b0, s.x[i]), rel=1e-12, abs=1e-12)

    def test_batching_does_not_change_bits(self, rng, monkeypatch):
        import errdens.regression as reg

        s = random_sample(rng, 300, 2)
        full, _ = loo_fit(s, 0.3)
        monkeypatch.setattr(reg, "_BLOCK_ELEMENTS", 7 * 300 * 2)
        blocked, _ = loo_fit(s, 0.3)
        np.testing.assert_array_equal(full, blocked)


class TestResiduals:
    def test_constant_m_gives_zero_residuals(self, rng):
        s = Sample(rng.random((200, 1)), np.full(200, -4.0))
        res = residuals(s, 0.1)
        assert np.all(np.abs(res.residuals[res.trim_mask]) < 1e-12)
        assert res.n_trimmed_in == int(res.trim_mask.sum())

    def test_outside_region_masked(self):
        x = np.linspace(0, 1, 51)[:, None]
        s = Sample(x, x[:, 0])
        res = residuals(s, 0.2, TrimRegion([0.2], [0.8]))
        assert not res.trim_mask[0] and res.outside_region[0]
        assert res.trim_mask[25]

    def test_noiseless_linear_interior(self):
        # Symmetric equispaced neighbourhoods reproduce a linear m exactly in the interior.
        x = np.linspace(0, 1, 2001)[:, None]
        s = Sample(x, x[:, 0])
        for b0 in (0.2, 0.1, 0.05):
            res = residuals(s, b0, TrimRegion([0.2], [0.8]))
            assert np.max(np.abs(res.residuals[res.trim_mask])) <= 1e-12 + b0**2

    def test_curved_bias_shrinks_with_b0(self):
        x = np.linspace(0, 1, 4001)[:, None]
        s = Sample(x, np.sin(3 * x[:, 0]))
        maxes = []
        for b0 in (0.2, 0.1, 0.05):
            res = residuals(s, b0, TrimRegion([0.3], [0.7]))
            maxes.append(np.max(np.abs(res.residuals[res.trim_mask])))
        assert maxes[0] > maxes[1] > maxes[2]
        assert maxes[2] <= 2.0 * 0.05**2

    def test_empty_neighbourhood_recorded(self):
        s = Sample(np.array([[0.0], [0.02], [0.5], [0.98], [1.0]]), np.arange(5.0))
        res = residuals(s, 0.1, TrimRegion([0.0], [1.0]))
        assert res.empty_neighborhood.tolist() == [False, False, True, False, False]
        assert np.isnan(res.residuals[2])
        assert not res.trim_mask[2]

    def test_all_trimmed(self):
        s = Sample(np.array([[0.0], [0.5], [1.0]]), np.zeros(3))
        with pytest.raises(AllTrimmed):
            residuals(s, 0.1, TrimRegion([0.0], [1.0]))


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
    def test_shift_equivariance(self, seed, c):
        rng = np.random.default_rng(seed)
        s = random_sample(rng, 30, 2)
        shifted = Sample(s.x, s.y + c)
        pt = s.x[0]
        assert nw_estimate(shifted, 0.7, pt) == pytest.approx(nw_estimate(s, 0.7, pt) + c, abs=1e-9)
        assert nw_loo(shifted, 0.7, 3) == pytest.approx(nw_loo(s, 0.7, 3) + c, abs=1e-9)
        r0 = residuals(s, 0.7, TrimRegion([0, 0], [1, 1]))
        r1 = residuals(shifted, 0.7, TrimRegion([0, 0], [1, 1]))
        np.testing.assert_allclose(r1.residuals, r0.residuals, atol=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_translation_invariance(self, seed, a, b):
        rng = np.random.default_rng(seed)
        s = random_sample(rng, 30, 2)
        t = np.array([a, b])
        moved = Sample(s.x + t, s.y)
        pt = np.array([0.4, 0.6])
        assert g_hat(moved, 0.6, pt + t) == pytest.approx(g_hat(s, 0.6, pt), rel=1e-9, abs=1e-12)
        assert nw_estimate(moved, 0.6, pt + t) == pytest.approx(nw_estimate(s, 0.6, pt), rel=1e-9, abs=1e-12)
        assert nw_loo(moved, 0.6, 5) == pytest.approx(nw_loo(s, 0.6, 5), rel=1e-9, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_weighted_average_bound(self, seed):
        rng = np.random.default_rng(seed)
        s = random_sample(rng, 25, 1)
        pt = 0.5
        near = np.abs(s.x[:, 0] - pt) < 0.5 * 0.4
        if not near.any():
            return
        val = nw_estimate(s, 0.4, pt)
        assert s.y[near].min() - 1e-12 <= val <= s.y[near].max() + 1e-12
