"""Episode runner, regret accounting, aggregation, slope fits, exports."""

import csv
import math

import numpy as np
import pytest

from pricelab import (
    EmlpPolicy,
    OnspPolicy,
    OraclePolicy,
    RegretTrace,
    StochasticScenario,
    aggregate,
    dyadic_checkpoints,
    episode_seed,
    expected_reward,
    fit_slope,
    greedy_price_vec,
    run_episode,
    run_horizon_envelope,
)
from pricelab.harness import EpisodeAbort, emlp_epoch_gaps, write_trace_csv
from pricelab.policies import PricingPolicy


class ConstantPricePolicy(PricingPolicy):
    """Posts one fixed price forever (a zero-learning baseline)."""

    name = "constant"

    def __init__(self, model, region, feature_bound, price):
        self._price = price
        super().__init__(model, region, feature_bound)

    def _reset_state(self):
        pass

    def _propose(self, x):
        return self._price

    def _feedback(self, point):
        pass

    def state_snapshot(self):
        return {"kind": self.name, "price": self._price}


class TestCheckpoints:
    def test_dyadic_plus_final(self):
        np.testing.assert_array_equal(dyadic_checkpoints(10), [1, 2, 4, 8, 10])
        np.testing.assert_array_equal(dyadic_checkpoints(16), [1, 2, 4, 8, 16])
        np.testing.assert_array_equal(dyadic_checkpoints(1), [1])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            dyadic_checkpoints(0)


class TestRunEpisode:
    def test_oracle_has_zero_regret(self, problem):
        policy = OraclePolicy(problem.model, problem.region, 1.0, problem.theta_star)
        _, trace = run_episode(policy, StochasticScenario(problem), 512, 3)
        assert trace.total <= 1e-9 * 512

    def test_zero_price_pays_full_regret(self, problem):
        policy = ConstantPricePolicy(problem.model, problem.region, 1.0, 0.0)
        scen = StochasticScenario(problem)
        transcript, trace = run_episode(policy, scen, 64, 3)
        u = transcript.features @ problem.theta_star
        best = expected_reward(problem.model, greedy_price_vec(problem.model, u), u)
        np.testing.assert_allclose(trace.increments, best, rtol=1e-12)
        assert np.all(trace.increments > 0.0)

    def test_deterministic(self, problem):
        scen = StochasticScenario(problem)
        make = lambda: OnspPolicy(problem.model, problem.region, 1.0, gamma=1.0, epsilon=1.0)
        t1, r1 = run_episode(make(), scen, 256, 11)
        t2, r2 = run_episode(make(), scen, 256, 11)
        np.testing.assert_array_equal(t1.prices, t2.prices)
        np.testing.assert_array_equal(t1.accepted, t2.accepted)
        np.testing.assert_array_equal(r1.cumulative, r2.cumulative)
        _, r3 = run_episode(make(), scen, 256, 12)
        assert not np.array_equal(r1.cumulative, r3.cumulative)

    def test_normalized_curve_undefined_at_one(self, problem):
        policy = OraclePolicy(problem.model, problem.region, 1.0, problem.theta_star)
        _, trace = run_episode(policy, StochasticScenario(problem), 8, 0)
        assert np.isnan(trace.over_log[0])
        assert np.all(np.isfinite(trace.over_log[1:]))

    def test_out_of_window_price_aborts(self, problem):
        policy = ConstantPricePolicy(problem.model, problem.region, 1.0, 0.5)
        policy._price = problem.price_window * 3.0  # bypass construction-time sanity
        with pytest.raises(EpisodeAbort):
            run_episode(policy, StochasticScenario(problem), 8, 0)

    def test_cumulative_nondecreasing(self, problem):
        policy = EmlpPolicy(problem.model, problem.region, 1.0)
        _, trace = run_episode(policy, StochasticScenario(problem), 256, 5)
        assert np.all(np.diff(trace.cumulative) >= -1e-12)


class TestAggregate:
    def _trace(self, cps, values):
        cps = np.asarray(cps)
        values = np.asarray(values, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            over = np.where(cps >= 2, values / np.log(cps), np.nan)
        return RegretTrace(None, cps, values, over)

    def test_identical_traces_zero_width(self):
        cps = np.array([1, 2, 4, 8])
        traces = [self._trace(cps, [1, 2, 3, 4])] * 3
        stats = aggregate(traces)
        np.testing.assert_allclose(stats.halfwidth, 0.0, atol=1e-14)
        np.testing.assert_allclose(stats.mean, [1, 2, 3, 4])

    def test_wald_formula(self):
        cps = np.array([1, 2, 4])
        t = cps.astype(float)
        stats = aggregate([self._trace(cps, 2 * t), self._trace(cps, 4 * t)])
        np.testing.assert_allclose(stats.mean, 3 * t, rtol=1e-14)
        np.testing.assert_allclose(stats.halfwidth, 1.96 * t, rtol=1e-12)

    def test_single_repetition_has_no_interval(self):
        cps = np.array([1, 2])
        stats = aggregate([self._trace(cps, [1.0, 2.0])])
        assert stats.halfwidth is None

    def test_mismatched_grids_rejected(self):
        with pytest.raises(ValueError):
            aggregate([self._trace([1, 2], [1, 2]), self._trace([1, 4], [1, 2])])


class TestFitSlope:
    def test_linear_curve(self):
        t = 2 ** np.arange(0, 17)
        fit = fit_slope((t, 5.0 * t.astype(float)), (1, 2**16))
        assert fit.slope == pytest.approx(1.0, abs=1e-12)
        assert fit.stderr == pytest.approx(0.0, abs=1e-10)

    def test_two_thirds_power(self):
        t = 2 ** np.arange(0, 17)
        fit = fit_slope((t, 0.3 * t.astype(float) ** (2 / 3)), (1, 2**16))
        assert fit.slope == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_seven_tenths_power(self):
        t = 2 ** np.arange(0, 17)
        fit = fit_slope((t, 1.7 * t.astype(float) ** 0.7), (1, 2**16))
        assert fit.slope == pytest.approx(0.7, abs=0.01)

    def test_log_curve_is_flat(self):
        t = 2 ** np.arange(1, 17)
        fit = fit_slope((t, 4.0 * np.log(t.astype(float))), (2**10, 2**16))
        assert fit.slope <= 0.2

    def test_nonpositive_checkpoints_excluded(self):
        t = 2 ** np.arange(0, 8)
        values = t.astype(float).copy()
        values[2] = 0.0
        with pytest.warns(UserWarning):
            fit = fit_slope((t, values), (1, 2**7))
        assert fit.n_points == len(t) - 1
        assert fit.slope == pytest.approx(1.0, abs=1e-12)

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            fit_slope((np.array([1, 2, 4]), np.array([1.0, 2.0, 3.0])), (1, 2))


class TestSeeding:
    def test_split_is_documented_function(self):
        a = episode_seed(7, 0).generate_state(4)
        b = episode_seed(7, 0).generate_state(4)
        c = episode_seed(7, 1).generate_state(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_repetition_order_does_not_matter(self, problem):
        scen = StochasticScenario(problem)
        make = lambda: OnspPolicy(problem.model, problem.region, 1.0, gamma=1.0, epsilon=1.0)
        _, first = run_episode(make(), scen, 64, episode_seed(1, 3))
        for rep in (0, 2, 1):
            run_episode(make(), scen, 64, episode_seed(1, rep))
        _, again = run_episode(make(), scen, 64, episode_seed(1, 3))
        np.testing.assert_array_equal(first.cumulative, again.cumulative)


class TestEnvelope:
    def test_checkpoints_are_the_horizons(self, problem):
        scen = StochasticScenario(problem)
        trace = run_horizon_envelope(
            lambda t: OraclePolicy(problem.model, problem.region, 1.0, problem.theta_star),
            scen,
            [2, 8, 4],
            seed=3,
        )
        np.testing.assert_array_equal(trace.checkpoints, [2, 4, 8])
        assert trace.increments is None
        np.testing.assert_allclose(trace.cumulative, 0.0, atol=1e-9)


class TestEpochGaps:
    def test_gaps_follow_epoch_schedule(self, problem):
        policy = EmlpPolicy(problem.model, problem.region, 1.0)
        run_episode(policy, StochasticScenario(problem), 2**6, 5)
        gaps = emlp_epoch_gaps(policy, problem.theta_star)
        assert [g[0] for g in gaps] == list(range(1, len(gaps) + 1))
        assert [g[1] for g in gaps] == [2**k for k in range(len(gaps))]
        assert all(np.isfinite(g[2]) for g in gaps)


class TestCsvExport:
    def _run(self, problem, reps, tmp_path):
        scen = StochasticScenario(problem)
        traces = []
        for rep in range(reps):
            policy = OnspPolicy(problem.model, problem.region, 1.0, gamma=1.0, epsilon=1.0)
            _, trace = run_episode(policy, scen, 32, episode_seed(0, rep))
            traces.append(trace)
        stats = aggregate(traces)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, traces, stats)
        with path.open() as fh:
            rows = list(csv.reader(fh))
        return rows, traces

    def test_wald_columns_present_for_multiple_reps(self, problem, tmp_path):
        rows, traces = self._run(problem, 2, tmp_path)
        assert rows[0] == ["rep", "t", "regret_cum", "regret_over_logt", "mean", "wald_halfwidth"]
        assert len(rows) == 1 + 2 * len(traces[0].checkpoints)

    def test_single_rep_drops_wald_columns(self, problem, tmp_path):
        rows, _ = self._run(problem, 1, tmp_path)
        assert rows[0] == ["rep", "t", "regret_cum", "regret_over_logt"]
        assert rows[1][3] == ""  # t=1 has no normalized value
