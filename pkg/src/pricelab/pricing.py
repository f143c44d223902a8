"""Greedy pricing against a known demand curve.

For expected valuation u and posted price v the expected revenue is
g(v, u) = v * (1 - F(v - u)).  Under strict log-concavity g(., u) has a
unique maximizer J(u) = u + phi^{-1}(u) where phi(w) = (1-F(w))/f(w) - w is
the virtual valuation; phi is strictly decreasing with slope < -1, so the
inverse is found by a bracketed, Newton-accelerated bisection and J itself
is a strict contraction (0 < J' < 1).

Also computed here: the curvature/steepness constants of the demand model on
the working window [-B, B + J(0)] that size regret bounds, solver step sizes
and Newton-step hyperparameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import NoiseModel

__all__ = [
    "AnalysisConstants",
    "InvariantViolation",
    "expected_reward",
    "virtual_valuation",
    "virtual_valuation_slope",
    "greedy_price",
    "greedy_price_vec",
    "price_cap",
    "first_order_residual",
    "compute_constants",
]


class InvariantViolation(RuntimeError):
    """A quantity that the model guarantees positive/finite came out otherwise."""


def expected_reward(model: NoiseModel, price, valuation):
    """Expected revenue v * (1 - F(v - u)).

    Evaluated as v * exp(log_sf(v-u)) so deep-tail prices neither underflow
    to 0*inf artifacts nor lose relative accuracy.
    """
    v = np.asarray(price, dtype=float)
    if np.any(v < 0):
        raise ValueError("price must be nonnegative")
    out = v * np.exp(model.log_sf(v - np.asarray(valuation, dtype=float)))
    return float(out) if np.ndim(price) == 0 and np.ndim(valuation) == 0 else out


def virtual_valuation(model: NoiseModel, omega):
    """phi(w) = (1 - F(w))/f(w) - w, strictly decreasing with phi' < -1."""
    out = np.asarray(model.mills_ratio(omega)) - np.asarray(omega, dtype=float)
    return float(out) if np.ndim(omega) == 0 else out


def virtual_valuation_slope(model: NoiseModel, omega):
    """phi'(w) = -2 - (f'/f)(w) * mills(w); always < -1."""
    m = np.asarray(model.mills_ratio(omega))
    out = -2.0 - np.asarray(model.log_pdf_slope(omega)) * m
    return float(out) if np.ndim(omega) == 0 else out


def greedy_price(model: NoiseModel, valuation: float, u_max: float | None = None, tol: float = 1e-13) -> float:
    """Revenue-maximizing price J(u) = u + phi^{-1}(u) for u >= 0.

    Works on the standardized scale: with m the standardized Mills ratio and
    c = u/spread, solves m(z) - z = c by bisection with Newton steps accepted
    whenever they stay inside the current sign-change bracket.  The initial
    bracket +-(c + 10) is guaranteed: m > 0 kills the left end and
    m(z) <= m(0) < 1.26 the right.  The returned price zeroes the
    first-order condition 1 - F(J-u) - J*f(J-u) to ~C*tol absolute residual,
    where C is the quadratic-regret constant of the model.
    """
    u = float(valuation)
    if not np.isfinite(u) or u < 0:
        raise ValueError("valuation must be finite and nonnegative")
    if u_max is not None and u > u_max * (1.0 + 1e-12):
        raise ValueError(f"valuation {u} exceeds the declared bound {u_max}")

    spread = model.spread
    target = u / spread
    lo = -(target + 10.0)
    hi = target + 10.0
    for _ in range(200):
        if model._mills(hi) - hi - target < 0.0:
            break
        hi = 2.0 * hi + 1.0
    else:
        raise InvariantViolation("failed to bracket the virtual valuation from above")
    ztol = tol / spread
    z = 0.0 if lo < 0.0 < hi else 0.5 * (lo + hi)
    for _ in range(200):
        val = model._mills(z) - z - target
        if val > 0.0:
            lo = z
        else:
            hi = z
        if hi - lo < ztol:
            break
        step = z - val / (model._mills_slope(z) - 1.0)
        z = step if lo < step < hi else 0.5 * (lo + hi)
    return u + spread * 0.5 * (lo + hi)


def greedy_price_vec(model: NoiseModel, valuations, iterations: int = 90) -> np.ndarray:
    """Vectorized J(u) by plain bisection; agrees with greedy_price to <1e-12."""
    u = np.asarray(valuations, dtype=float)
    if u.size == 0:
        return np.asarray(u, dtype=float).copy()
    if np.any(~np.isfinite(u)) or np.any(u < 0):
        raise ValueError("valuations must be finite and nonnegative")
    spread = model.spread
    target = u / spread
    lo = -(target + 10.0)
    hi = target + 10.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = model._mills(mid) - mid > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return u + spread * 0.5 * (lo + hi)


def price_cap(model: NoiseModel, b: float) -> float:
    """Price search window V_max = B + J(0); every policy prices inside [0, V_max]."""
    if b <= 0:
        raise ValueError("valuation bound must be positive")
    return b + greedy_price(model, 0.0)


def first_order_residual(model: NoiseModel, valuation, price):
    """|1 - F(v-u) - v f(v-u)|, the stationarity defect of a candidate price."""
    w = np.asarray(price, dtype=float) - np.asarray(valuation, dtype=float)
    out = np.abs(model.sf(w) - np.asarray(price) * model.pdf(w))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AnalysisConstants:
    """Demand-model constants on the window [-B, B + J(0)].

    c_quad bounds the pricing regret by a quadratic in the valuation error;
    c_down is the strong-convexity floor of both log-likelihood branches;
    c_exp the squared-hazard ceiling; alpha = c_down/c_exp is the
    exp-concavity level of the per-round loss.
    """

    b_f: float
    b_fprime: float
    j0: float
    c_quad: float
    c_down: float
    c_exp: float
    alpha: float


def compute_constants(model: NoiseModel, b: float, grid_points: int = 20001) -> AnalysisConstants:
    """Evaluate the analysis constants numerically on a dense grid.

    c_quad has the closed form 2*B_f + (B + J(0))*B_f'; the inf/sup pair has
    none, so both are taken over a >=10^4-point grid of the window with
    geometric refinement clusters at both endpoints (where the extrema of
    our models actually live).
    """
    if b <= 0:
        raise ValueError("valuation bound must be positive")
    if grid_points < 10_000:
        raise ValueError("grid must have at least 10^4 points")
    j0 = greedy_price(model, 0.0)
    lo, hi = -b, b + j0
    width = hi - lo
    base = np.linspace(lo, hi, grid_points)
    edge = width * np.geomspace(1e-9, 1e-2, 40)
    grid = np.unique(np.concatenate([base, lo + edge, hi - edge]))

    curv = np.minimum(model.log_sf_curvature(grid), model.log_cdf_curvature(grid))
    c_down = float(np.min(curv))
    if not np.isfinite(c_down) or c_down <= 0.0:
        raise InvariantViolation(
            f"strong-convexity floor must be positive, got {c_down} (log-concavity broken?)"
        )

    steep = np.maximum(np.asarray(model.hazard(grid)), np.asarray(model.reverse_hazard(grid)))
    c_exp = float(np.max(steep) ** 2)
    c_quad = 2.0 * model.b_f + (b + j0) * model.b_fprime
    return AnalysisConstants(
        b_f=model.b_f,
        b_fprime=model.b_fprime,
        j0=j0,
        c_quad=c_quad,
        c_down=c_down,
        c_exp=c_exp,
        alpha=c_down / c_exp,
    )
