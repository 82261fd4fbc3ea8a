import math

import numpy as np
import pytest

from survdr.simulate import (
    SimSetting,
    censoring_rate,
    default_anchor_rows,
    generate,
    rng_stream,
    subseed,
    true_directions,
    _draw_c,
    _draw_t,
    _draw_x,
)
from survdr.stiefel import orthonormality_error


class TestSimSetting:
    def test_valid(self):
        s = SimSetting(1, 6, 400, 7)
        assert s.p == 6

    def test_rejects_bad_id(self):
        with pytest.raises(ValueError, match="1..4"):
            SimSetting(5)

    def test_rejects_small_p(self):
        with pytest.raises(ValueError, match="p >= 6"):
            SimSetting(1, p=4)


class TestTruth:
    def test_directions_shapes(self):
        assert true_directions(1, 6).shape == (6, 1)
        for sid in (2, 3, 4):
            assert true_directions(sid, 8).shape == (8, 2)

    def test_anchor_blocks_are_identity(self):
        for sid in (1, 2, 3, 4):
            raw = true_directions(sid, 6)
            rows = list(default_anchor_rows(sid))
            np.testing.assert_allclose(raw[rows], np.eye(len(rows)))

    def test_truth_orthonormal(self):
        for sid in (1, 2, 3, 4):
            _, truth = generate(SimSetting(sid, 6, 50, seed=3))
            assert orthonormality_error(truth.b_true) < 1e-12
            assert truth.d_true == (1 if sid == 1 else 2)


class TestGenerate:
    def test_shapes_and_validity(self):
        for sid in (1, 2, 3, 4):
            ds, _ = generate(SimSetting(sid, 6, 200, seed=5))
            assert ds.n == 200 and ds.p == 6
            assert (ds.y > 0).all() and ds.n_events >= 1

    def test_deterministic_given_seed(self):
        a, _ = generate(SimSetting(2, 6, 100, seed=9))
        b, _ = generate(SimSetting(2, 6, 100, seed=9))
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
        assert np.array_equal(a.delta, b.delta)

    def test_streams_differ(self):
        a, _ = generate(SimSetting(1, 6, 100, seed=9), stream=0)
        b, _ = generate(SimSetting(1, 6, 100, seed=9), stream=1)
        assert not np.array_equal(a.y, b.y)

    def test_setting3_covariates_uniform(self):
        ds, _ = generate(SimSetting(3, 6, 5000, seed=4))
        assert ds.x.min() >= 0.0 and ds.x.max() <= 1.0


class TestParameterizationAudits:
    def test_exponential_rate_is_hazard(self):
        # zero covariates: rate exp(0) = 1, so mean survival time is 1
        g = rng_stream(8)
        x = np.zeros((1_000_000, 6))
        t = _draw_t(1, x, g)
        assert abs(t.mean() - 1.0) < 0.01

    def test_weibull_scale_shape(self):
        # frozen exponent: scale 1, shape 5 gives mean Gamma(1 + 1/5)
        g = rng_stream(9)
        x = np.zeros((1_000_000, 6))
        x[:, 0] = 1.0  # makes b1'x - 1 = 0 after the first coordinate trick
        t = _draw_t(3, np.zeros((1_000_000, 6)) + x * 0, g)
        # direct: all-zero x gives scale exp(4 * 0 * (0 - 1)) = 1
        assert abs(t.mean() - math.gamma(1.2)) < 0.01

    def test_degenerate_censoring_bounds(self):
        g = rng_stream(10)
        x = _draw_x(1, 6, 50_000, g)
        t = _draw_t(1, x, g)
        assert np.mean(t > np.inf) == 0.0  # C at infinity: nothing censored
        assert np.mean(np.full_like(t, np.inf) > t) == 1.0  # T at infinity: all censored


class TestCensoringRates:
    """Monte Carlo rates under the documented generating processes.

    Settings 1 and 3 agree with the published figures.  Settings 2 and 4
    are implemented exactly as documented but their published rates are
    not reproducible from the printed formulas; the values asserted here
    are the rates the formulas actually produce (the acceptance suite
    tracks the published numbers and reports the discrepancy).
    """

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "sid,rate",
        [(1, 0.353), (2, 0.192), (3, 0.338), (4, 0.284)],
    )
    def test_rates(self, sid, rate):
        got = censoring_rate(SimSetting(sid, 6, 400, seed=2026), n_mc=400_000)
        assert abs(got - rate) < 0.012

    def test_needs_enough_draws(self):
        with pytest.raises(ValueError, match="10000"):
            censoring_rate(SimSetting(1), n_mc=100)


class TestStreams:
    def test_subseed_deterministic(self):
        assert subseed(5, 1, 2) == subseed(5, 1, 2)
        assert subseed(5, 1, 2) != subseed(5, 2, 1)

    def test_rng_stream_independent(self):
        a = rng_stream(3, 0).standard_normal(5)
        b = rng_stream(3, 1).standard_normal(5)
        assert not np.allclose(a, b)
        np.testing.assert_array_equal(a, rng_stream(3, 0).standard_normal(5))
