"""Command-line front end.

Subcommands:

* ``run [config.json]`` - execute every (policy, scenario) pair in the
  config (built-in defaults when no path is given), write one CSV trace per
  pair plus a run-level ``summary.json``.  Exit 0 on success, 1 on an
  aborted run, 2 on an invalid config (with per-key diagnostics).
* ``verify [--fast]`` - run the invariant suite, one PASS/FAIL line per
  check; exit 1 if anything fails.
* ``lower-bound-demo --t T --reps R --seed S [--policy ...]`` - run one
  policy against the two nearly indistinguishable fixed-valuation markets
  and report the summed regret next to the sqrt(T)/24000 floor.  Purely
  demonstrative: the floor is a statement about all policies, the demo
  measures one.
* ``constants --sigma S --b B`` - print the analysis constants of a
  Gaussian market.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, build_policy, build_scenario, default_config, load_config
from .environments import FIXED_VALUATION, FixedValuationScenario, lower_bound_pair
from .harness import (
    EpisodeAbort,
    aggregate,
    dyadic_checkpoints,
    episode_seed,
    fit_slope,
    run_episode,
    run_horizon_envelope,
    write_summary_json,
    write_trace_csv,
)
from .noise import GaussianNoise
from .policies import EmlpPolicy, OnspPolicy, OraclePolicy
from .pricing import compute_constants
from .verify import run_checks

__all__ = ["main", "run_experiments", "lower_bound_demo"]

DEMO_POLICIES = ("onsp", "emlp", "oracle-sigma1")


def _pair_worker(args: tuple) -> dict:
    """Run one repetition of one (policy, scenario) pair; process-pool safe."""
    raw, policy_index, scenario_name, rep = args
    from .config import parse_config  # local import keeps the worker picklable

    config = parse_config(raw)
    spec = config.policies[policy_index]
    horizon = config.effective_horizon(spec)
    scenario = build_scenario(scenario_name, config.problem)
    seed = episode_seed(config.master_seed, rep)
    if spec["kind"] == "exp4":
        # grid sizes depend on the horizon, so the growth law is measured
        # across one independent run per dyadic horizon
        trace = run_horizon_envelope(
            lambda t: build_policy(spec, config.problem, t),
            scenario,
            dyadic_checkpoints(horizon),
            seed,
        )
    else:
        policy = build_policy(spec, config.problem, horizon)
        _, trace = run_episode(policy, scenario, horizon, seed)
    return {"trace": trace, "rep": rep}


def run_experiments(config: ExperimentConfig, out_dir=None, workers: int = 1) -> dict:
    """Execute all (policy, scenario) pairs; returns the summary payload."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary: dict = {"config": config.raw, "pairs": [], "seeds": list(range(config.repetitions))}
    for policy_index, spec in enumerate(config.policies):
        horizon = config.effective_horizon(spec)
        for scenario_name in config.scenarios:
            jobs = [(config.raw, policy_index, scenario_name, rep) for rep in range(config.repetitions)]
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(_pair_worker, jobs))
            else:
                results = [_pair_worker(job) for job in jobs]
            results.sort(key=lambda r: r["rep"])
            traces = [r["trace"] for r in results]
            stats = aggregate(traces)
            window = (min(config.slope_window[0], horizon // 4), min(config.slope_window[1], horizon))
            fit = fit_slope(stats, window)
            name = f"{spec['kind']}_{scenario_name}"
            write_trace_csv(out / f"{name}.csv", traces, stats)
            summary["pairs"].append(
                {
                    "policy": spec,
                    "scenario": scenario_name,
                    "horizon": horizon,
                    "repetitions": config.repetitions,
                    "final_regret_mean": float(stats.mean[-1]),
                    "slope": fit.slope,
                    "slope_stderr": fit.stderr,
                    "slope_window": list(window),
                    "trace_csv": f"{name}.csv",
                }
            )
    write_summary_json(out / "summary.json", summary)
    return summary


def lower_bound_demo(horizon: int, reps: int, seed: int, policy_kind: str = "onsp") -> dict:
    """Summed regret of one policy on the indistinguishable noise-scale pair.

    The policy believes the unit-noise market; the reported floor
    sqrt(T)/24000 is what no policy can beat on the pair's sum.
    """
    if horizon <= 16:
        raise ValueError("horizon must exceed 16 for a meaningful pair")
    if policy_kind not in DEMO_POLICIES:
        raise ValueError(f"policy must be one of {DEMO_POLICIES}")
    sigma1, sigma2 = lower_bound_pair(horizon)
    scenarios = [FixedValuationScenario.build(sigma=sigma1), FixedValuationScenario.build(sigma=sigma2)]
    believed = GaussianNoise(sigma1)
    region = scenarios[0].problem.region
    theta_star = scenarios[0].problem.theta_star

    def fresh_policy():
        if policy_kind == "onsp":
            return OnspPolicy(believed, region, 1.0, gamma=1.0, epsilon=1.0)
        if policy_kind == "emlp":
            return EmlpPolicy(believed, region, 1.0)
        return OraclePolicy(believed, region, 1.0, theta_star)

    totals = []
    for scenario in scenarios:
        per_rep = []
        for rep in range(reps):
            _, trace = run_episode(fresh_policy(), scenario, horizon, episode_seed(seed, rep))
            per_rep.append(trace.total)
        totals.append(float(np.mean(per_rep)))
    floor = float(np.sqrt(horizon) / 24000.0)
    return {
        "policy": policy_kind,
        "horizon": horizon,
        "repetitions": reps,
        "fixed_valuation": FIXED_VALUATION,
        "sigma_pair": [sigma1, sigma2],
        "regret_sigma1": totals[0],
        "regret_sigma2": totals[1],
        "regret_sum": totals[0] + totals[1],
        "floor_sqrt_t_over_24000": floor,
        "exceeds_floor": totals[0] + totals[1] >= floor,
    }


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pricelab", description="dynamic pricing regret lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiments of a config file")
    p_run.add_argument("config", nargs="?", default=None, help="JSON config path (defaults built in)")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--seed", type=int, default=None, help="master seed override")
    p_run.add_argument("--workers", type=int, default=1, help="parallel repetitions")

    p_verify = sub.add_parser("verify", help="run the invariant suite")
    p_verify.add_argument("--fast", action="store_true", help="reduced grid densities")

    p_demo = sub.add_parser("lower-bound-demo", help="two-market indistinguishability demo")
    p_demo.add_argument("--t", type=int, required=True, help="horizon T")
    p_demo.add_argument("--reps", type=int, default=5)
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--policy", choices=DEMO_POLICIES, default="onsp")

    p_const = sub.add_parser("constants", help="print Gaussian analysis constants")
    p_const.add_argument("--sigma", type=float, required=True)
    p_const.add_argument("--b", type=float, required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "run":
        try:
            config = load_config(args.config) if args.config else default_config()
        except ConfigError as exc:
            for line in exc.problems:
                print(f"config error: {line}", file=sys.stderr)
            return 2
        if args.seed is not None:
            raw = dict(config.raw)
            raw["master_seed"] = args.seed
            from .config import parse_config

            config = parse_config(raw)
        try:
            summary = run_experiments(config, out_dir=args.out, workers=args.workers)
        except EpisodeAbort as exc:
            print(f"run aborted: {exc}", file=sys.stderr)
            return 1
        for pair in summary["pairs"]:
            print(
                f"{pair['policy']['kind']:>6s} x {pair['scenario']:<11s} "
                f"T={pair['horizon']:<6d} Reg(T)={pair['final_regret_mean']:.3f} "
                f"slope={pair['slope']:.3f}+-{pair['slope_stderr']:.3f}"
            )
        return 0

    if args.command == "verify":
        results = run_checks(fast=args.fast)
        for res in results:
            print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        return 1 if failed else 0

    if args.command == "lower-bound-demo":
        report = lower_bound_demo(args.t, args.reps, args.seed, args.policy)
        print(json.dumps(report, indent=2))
        return 0

    if args.command == "constants":
        constants = compute_constants(GaussianNoise(args.sigma), args.b)
        print(json.dumps(constants.__dict__, indent=2))
        return 0

    return 2  # unreachable with required=True


if __name__ == "__main__":
    raise SystemExit(main())
