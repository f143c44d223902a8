"""Simulated markets: feature laws, sale resolution, lower-bound geometry."""

import math

import numpy as np
import pytest

from pricelab import (
    AlternatingScenario,
    FIXED_VALUATION,
    FixedValuationScenario,
    GaussianNoise,
    OrthantBall,
    PricingProblem,
    StochasticScenario,
    expected_reward,
    greedy_price,
    lower_bound_pair,
    resolve_sale,
)


class TestAlternating:
    def test_block_pattern(self, problem, rng):
        x = AlternatingScenario(problem).features(16, rng)
        np.testing.assert_array_equal(x[0], [1.0, 0.0])  # t=1, block 1
        np.testing.assert_array_equal(x[1], [0.0, 1.0])  # t=2, block 2
        np.testing.assert_array_equal(x[2], [0.0, 1.0])  # t=3, block 2
        np.testing.assert_array_equal(x[3], [1.0, 0.0])  # t=4, block 3
        np.testing.assert_array_equal(x[6], [1.0, 0.0])  # t=7, block 3
        np.testing.assert_array_equal(x[7], [0.0, 1.0])  # t=8, block 4
        np.testing.assert_array_equal(x[15], [1.0, 0.0])  # t=16, block 5

    def test_deterministic(self, problem, rng):
        scen = AlternatingScenario(problem)
        np.testing.assert_array_equal(scen.features(64, rng), scen.features(64, np.random.default_rng(99)))

    def test_requires_two_dimensions(self):
        problem3 = PricingProblem(
            GaussianNoise(0.25), OrthantBall(1.0, 3), np.array([0.5, 0.5, 0.1]), 1.0
        )
        with pytest.raises(ValueError):
            AlternatingScenario(problem3)


class TestStochastic:
    def test_contract_and_magnitudes(self, problem, rng):
        scen = StochasticScenario(problem)
        x = scen.features(20_000, rng)
        scen.check_features(x)
        norms = np.linalg.norm(x, axis=1)
        assert np.all(norms >= 0.5 - 1e-12)
        assert np.all(norms <= 1.0 + 1e-12)
        assert np.all(x >= 0.0)

    def test_reproducible(self, problem):
        scen = StochasticScenario(problem)
        a = scen.features(100, np.random.default_rng(5))
        b = scen.features(100, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_higher_dimension_branch(self, rng):
        problem3 = PricingProblem(
            GaussianNoise(0.25), OrthantBall(1.0, 3), np.array([0.4, 0.4, 0.4]), 1.0
        )
        scen = StochasticScenario(problem3)
        x = scen.features(5000, rng)
        scen.check_features(x)
        assert x.shape == (5000, 3)


class TestFixedValuation:
    def test_pins_the_valuation(self, rng):
        scen = FixedValuationScenario.build()
        x = scen.features(50, rng)
        u = x @ scen.problem.theta_star
        np.testing.assert_allclose(u, FIXED_VALUATION, rtol=1e-14)
        scen.check_features(x)

    def test_custom_sigma(self, rng):
        scen = FixedValuationScenario.build(sigma=0.5)
        assert scen.problem.model.sigma == 0.5
        assert scen.problem.valuation_bound == pytest.approx(FIXED_VALUATION)


class TestResolveSale:
    def test_zero_price_always_pays_nothing(self, gauss1, rng):
        outcomes = [resolve_sale(gauss1, 0.7, 0.0, rng) for _ in range(200)]
        assert all(o.reward == 0.0 for o in outcomes)
        accept_rate = np.mean([o.accepted for o in outcomes])
        assert accept_rate > 0.5  # 1 - F(-0.7) ~ 0.76

    def test_acceptance_frequency(self, gauss1):
        rng = np.random.default_rng(3)
        u, v, n = 0.6, 0.6, 100_000
        hits = sum(resolve_sale(gauss1, u, v, rng).accepted for _ in range(n))
        p = 1.0 - gauss1.cdf(v - u)  # = 1/2 at the valuation
        assert p == pytest.approx(0.5, abs=1e-12)
        assert abs(hits / n - p) <= 4.0 * math.sqrt(p * (1 - p) / n)

    def test_reward_consistency(self, gauss1, rng):
        out = resolve_sale(gauss1, 0.5, 0.4, rng)
        assert out.reward == (0.4 if out.accepted else 0.0)
        assert out.accepted == (0.4 <= out.valuation)

    def test_fixed_point_market_half_acceptance(self):
        # at the unit-noise fixed point the optimal price is the valuation
        # itself, accepted half the time for an expected reward of u*/2
        rng = np.random.default_rng(11)
        v = greedy_price(GaussianNoise(1.0), FIXED_VALUATION)
        assert v == pytest.approx(FIXED_VALUATION, abs=1e-9)
        hits = sum(resolve_sale(GaussianNoise(1.0), FIXED_VALUATION, v, rng).accepted for _ in range(50_000))
        assert abs(hits / 50_000 - 0.5) < 4.0 * math.sqrt(0.25 / 50_000)
        assert expected_reward(GaussianNoise(1.0), v, FIXED_VALUATION) == pytest.approx(
            FIXED_VALUATION / 2.0, rel=1e-12
        )

    def test_negative_price_rejected(self, gauss1, rng):
        with pytest.raises(ValueError):
            resolve_sale(gauss1, 0.5, -0.1, rng)


class TestLowerBoundPair:
    def test_small_horizon(self):
        assert lower_bound_pair(16) == (1.0, 0.5)

    def test_large_horizon(self):
        assert lower_bound_pair(2**16) == (1.0, 1.0 - 1.0 / 16.0)

    def test_open_interval_needs_t_beyond_16(self):
        assert lower_bound_pair(17)[1] > 0.5
        assert lower_bound_pair(10**8)[1] < 1.0

    def test_requires_t_above_two(self):
        with pytest.raises(ValueError):
            lower_bound_pair(2)


class TestLowerBoundGeometry:
    @pytest.mark.parametrize("sigma", [0.6, 0.75, 0.9])
    def test_small_noise_prices_below_the_fixed_point(self, sigma):
        j = greedy_price(GaussianNoise(sigma), FIXED_VALUATION)
        assert j < FIXED_VALUATION - 1e-9
        assert FIXED_VALUATION - j >= 0.4 * (1.0 - sigma) - 1e-9

    @pytest.mark.parametrize("sigma", [0.6, 0.75, 0.9])
    def test_quadratic_revenue_margin(self, sigma):
        model = GaussianNoise(sigma)
        v_best = greedy_price(model, FIXED_VALUATION)
        grid = np.linspace(1e-9, FIXED_VALUATION - 1e-9, 1000)
        margin = expected_reward(model, v_best, FIXED_VALUATION) - expected_reward(model, grid, FIXED_VALUATION)
        assert np.min(margin - (v_best - grid) ** 2 / 60.0) >= -1e-9


class TestProblemValidation:
    def test_theta_star_must_be_feasible(self):
        with pytest.raises(ValueError):
            PricingProblem(GaussianNoise(0.25), OrthantBall(1.0, 2), np.array([1.0, 1.0]), 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            PricingProblem(GaussianNoise(0.25), OrthantBall(1.0, 2), np.array([0.5, 0.5, 0.5]), 1.0)

    def test_price_window(self, problem):
        j0 = greedy_price(problem.model, 0.0)
        assert problem.price_window == pytest.approx(1.0 + j0, rel=1e-12)
