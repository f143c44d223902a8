"""Episode runner and regret measurement.

Regret is ex-ante: each round contributes
rho_t = g(J(u*_t), u*_t) - g(v_t, u*_t) computed analytically from the true
expected valuation u*_t = x_t'theta* and the environment's noise law - never
from realized payoffs.  Cumulative regret is sampled at the dyadic
checkpoints 1, 2, 4, ..., and the final round; repetitions aggregate into
means with 95% Wald half-widths, and growth rates come from least squares on
(log2 t, log2 Reg(t)).

Randomness: an episode seed s expands as SeedSequence([s]) -> (environment
stream, policy stream); repetition r of a run with master seed m uses
episode seed derived from SeedSequence([m, r]).  Everything downstream is a
pure function of those integers, so repetitions can run in any order or in
parallel without changing results.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .environments import Scenario
from .policies import EmlpPolicy, PricingPolicy
from .pricing import expected_reward, greedy_price_vec

__all__ = [
    "Transcript",
    "RegretTrace",
    "AggregateStats",
    "SlopeFit",
    "EpisodeAbort",
    "dyadic_checkpoints",
    "episode_seed",
    "run_episode",
    "run_horizon_envelope",
    "replay_prices",
    "aggregate",
    "fit_slope",
    "emlp_epoch_gaps",
    "write_trace_csv",
    "write_summary_json",
]


class EpisodeAbort(RuntimeError):
    """A policy violated the episode contract (e.g. priced outside [0, V_max])."""


@dataclass
class Transcript:
    """Everything the policy saw and did: (x_t, v_t, sale_t) for all rounds."""

    features: np.ndarray
    prices: np.ndarray
    accepted: np.ndarray

    def __len__(self) -> int:
        return self.prices.shape[0]


@dataclass
class RegretTrace:
    """Per-round regret increments plus dyadic-checkpoint summaries.

    ``increments`` is None for horizon-envelope traces (one final regret per
    sub-run, no single per-round sequence exists).
    """

    increments: np.ndarray | None
    checkpoints: np.ndarray
    cumulative: np.ndarray
    over_log: np.ndarray  # Reg(t)/ln t, NaN at t=1

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])


@dataclass
class AggregateStats:
    """Across-repetition means and 95% Wald half-widths per checkpoint."""

    checkpoints: np.ndarray
    mean: np.ndarray
    halfwidth: np.ndarray | None  # None when a single repetition was run
    mean_over_log: np.ndarray
    halfwidth_over_log: np.ndarray | None
    repetitions: int


@dataclass
class SlopeFit:
    slope: float
    stderr: float
    n_points: int


def dyadic_checkpoints(horizon: int) -> np.ndarray:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    powers = 2 ** np.arange(0, int(np.floor(np.log2(horizon))) + 1)
    return np.unique(np.concatenate([powers, [horizon]]))


def episode_seed(master_seed: int, repetition: int) -> np.random.SeedSequence:
    """Documented splitting rule: SeedSequence([master_seed, repetition])."""
    return np.random.SeedSequence([int(master_seed), int(repetition)])


def run_episode(
    policy: PricingPolicy,
    scenario: Scenario,
    horizon: int,
    seed,
    check_features: bool = False,
) -> tuple[Transcript, RegretTrace]:
    """Play the four-step protocol for ``horizon`` rounds.

    The policy is reset here with its derived stream; identical
    (policy config, scenario, seed) inputs give bit-identical outputs.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence([int(seed)])
    env_stream, policy_stream = root.spawn(2)
    env_rng = np.random.default_rng(env_stream)

    problem = scenario.problem
    features = scenario.features(horizon, env_rng)
    if check_features:
        scenario.check_features(features)
    noise = np.asarray(problem.model.sample(env_rng, horizon))
    u_star = features @ problem.theta_star

    policy.reset(policy_stream)
    prices = np.empty(horizon)
    accepted = np.empty(horizon, dtype=bool)
    cap = policy.price_cap * (1.0 + 1e-9) + 1e-12
    for t in range(horizon):
        try:
            v = policy.propose(features[t])
        except RuntimeError as exc:
            raise EpisodeAbort(f"round {t + 1}: {exc}") from exc
        if not (0.0 <= v <= cap):
            raise EpisodeAbort(f"round {t + 1}: price {v} outside [0, {policy.price_cap}]")
        sale = bool(v <= u_star[t] + noise[t])
        policy.feedback(sale)
        prices[t] = v
        accepted[t] = sale

    best_prices = greedy_price_vec(problem.model, np.clip(u_star, 0.0, None))
    best = expected_reward(problem.model, best_prices, u_star)
    got = expected_reward(problem.model, prices, u_star)
    rho = best - got
    if float(np.min(rho)) < -1e-12:
        raise EpisodeAbort("negative regret increment: comparator not optimal")

    cps = dyadic_checkpoints(horizon)
    cum = np.cumsum(rho)[cps - 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        over_log = np.where(cps >= 2, cum / np.log(cps), np.nan)
    transcript = Transcript(features, prices, accepted)
    return transcript, RegretTrace(rho, cps, cum, over_log)


def run_horizon_envelope(
    policy_builder,
    scenario: Scenario,
    horizons,
    seed,
) -> RegretTrace:
    """Final regret of one independent run per horizon, as one trace.

    For policies that must know the horizon in advance (their grids scale
    with T), the growth law lives across horizons, not within a single run:
    ``policy_builder(T)`` makes the policy for horizon T, the sub-run plays
    exactly T rounds, and checkpoint T of the returned trace records that
    run's final regret.
    """
    horizons = np.asarray(sorted(int(t) for t in horizons))
    if horizons.size == 0 or horizons[0] < 1:
        raise ValueError("horizons must be positive")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence([int(seed)])
    streams = root.spawn(len(horizons))
    finals = np.empty(len(horizons))
    for i, horizon in enumerate(horizons):
        policy = policy_builder(int(horizon))
        _, trace = run_episode(policy, scenario, int(horizon), streams[i])
        finals[i] = trace.total
    with np.errstate(divide="ignore", invalid="ignore"):
        over_log = np.where(horizons >= 2, finals / np.log(horizons), np.nan)
    return RegretTrace(None, horizons, finals, over_log)


def replay_prices(policy: PricingPolicy, transcript: Transcript, seed) -> np.ndarray:
    """Drive a fresh policy through a recorded transcript; returns its prices."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence([int(seed)])
    _, policy_stream = root.spawn(2)
    policy.reset(policy_stream)
    prices = np.empty(len(transcript))
    for t in range(len(transcript)):
        prices[t] = policy.propose(transcript.features[t])
        policy.feedback(bool(transcript.accepted[t]))
    return prices


def aggregate(traces: list[RegretTrace]) -> AggregateStats:
    if not traces:
        raise ValueError("need at least one trace")
    cps = traces[0].checkpoints
    for tr in traces[1:]:
        if not np.array_equal(tr.checkpoints, cps):
            raise ValueError("checkpoint grids differ between traces")
    cum = np.stack([tr.cumulative for tr in traces])
    over = np.stack([tr.over_log for tr in traces])
    reps = len(traces)
    mean = cum.mean(axis=0)
    mean_over = over.mean(axis=0)
    if reps >= 2:
        hw = 1.96 * cum.std(axis=0, ddof=1) / np.sqrt(reps)
        hw_over = 1.96 * over.std(axis=0, ddof=1) / np.sqrt(reps)
    else:
        hw = hw_over = None
    return AggregateStats(cps, mean, hw, mean_over, hw_over, reps)


def fit_slope(source, window: tuple[float, float]) -> SlopeFit:
    """OLS slope of log2 Reg(t) on log2 t over checkpoints inside ``window``.

    Accepts a RegretTrace or AggregateStats.  Checkpoints with nonpositive
    regret are excluded with a warning.
    """
    if isinstance(source, RegretTrace):
        cps, values = source.checkpoints, source.cumulative
    elif isinstance(source, AggregateStats):
        cps, values = source.checkpoints, source.mean
    else:
        cps, values = source
        cps, values = np.asarray(cps), np.asarray(values)
    lo, hi = window
    mask = (cps >= lo) & (cps <= hi)
    bad = mask & (values <= 0.0)
    if np.any(bad):
        warnings.warn(f"excluding {int(bad.sum())} nonpositive regret checkpoints from slope fit")
        mask &= values > 0.0
    if mask.sum() < 3:
        raise ValueError("need at least 3 positive checkpoints inside the window")
    lx = np.log2(cps[mask].astype(float))
    ly = np.log2(values[mask])
    n = lx.size
    vx = lx - lx.mean()
    slope = float(vx @ (ly - ly.mean()) / (vx @ vx))
    resid = ly - (ly.mean() + slope * vx)
    stderr = float(np.sqrt((resid @ resid) / max(n - 2, 1) / (vx @ vx)))
    return SlopeFit(slope, stderr, int(n))


def emlp_epoch_gaps(policy: EmlpPolicy, theta_star) -> list[tuple[int, int, float]]:
    """Per-epoch surrogate gaps (k, tau_k, L_k(theta_k) - L_k(theta*))."""
    theta_star = np.asarray(theta_star, dtype=float)
    out = []
    for record in policy.epoch_log:
        gap = record.batch.value(record.theta_used) - record.batch.value(theta_star)
        out.append((record.index, record.length, float(gap)))
    return out


# -- file output ----------------------------------------------------------


def write_trace_csv(path, traces: list[RegretTrace], stats: AggregateStats) -> None:
    """One row per (repetition, checkpoint); aggregate columns only when R >= 2."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with_interval = stats.halfwidth is not None
    header = ["rep", "t", "regret_cum", "regret_over_logt"]
    if with_interval:
        header += ["mean", "wald_halfwidth"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rep, trace in enumerate(traces):
            for i, t in enumerate(trace.checkpoints):
                row = [
                    rep,
                    int(t),
                    f"{trace.cumulative[i]:.10g}",
                    "" if np.isnan(trace.over_log[i]) else f"{trace.over_log[i]:.10g}",
                ]
                if with_interval:
                    row += [f"{stats.mean[i]:.10g}", f"{stats.halfwidth[i]:.10g}"]
                writer.writerow(row)


def write_summary_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
