"""Per-round sale likelihood: loss, gradient, Hessian, and the batch MLE.

One observed round (x, v, accepted) contributes the negative log-likelihood

    l(theta) = -log(1 - F(v - x'theta))   if the sale happened,
               -log F(v - x'theta)        otherwise,

a convex, exp-concave function of theta that depends on theta only through
x'theta.  Gradients/Hessians are the hazard (resp. reverse hazard) and the
log-concavity curvatures times x and xx'; all scalars come from the stable
log-space forms in :mod:`pricelab.noise`.

The batch objective averages the per-round losses; its constrained minimizer
is found by projected gradient with a fixed 1/L step plus monotone Armijo
backtracking.  When the batch does not span the parameter space the optimum
is only unique along the data span and the returned point inherits the
warm-start's component in the null space - deliberate, and exercised by the
adversarial experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import NoiseModel
from .pricing import compute_constants
from .regions import Region

__all__ = [
    "LossPoint",
    "BatchObjective",
    "MleResult",
    "point_loss",
    "point_gradient",
    "point_hessian",
    "solve_mle",
]

ARMIJO = 1e-4


@dataclass(frozen=True)
class LossPoint:
    """One recorded round: feature vector, posted price, sale indicator."""

    x: np.ndarray
    price: float
    accepted: bool

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.x.ndim != 1 or not np.all(np.isfinite(self.x)):
            raise ValueError("feature must be a finite 1-d vector")
        if not (np.isfinite(self.price) and self.price >= 0):
            raise ValueError("price must be finite and nonnegative")


def _margin(point: LossPoint, theta) -> float:
    return float(point.price - point.x @ np.asarray(theta, dtype=float))


def point_loss(point: LossPoint, theta, model: NoiseModel) -> float:
    w = _margin(point, theta)
    return -model.log_sf(w) if point.accepted else -model.log_cdf(w)


def point_gradient(point: LossPoint, theta, model: NoiseModel) -> np.ndarray:
    w = _margin(point, theta)
    scalar = -model.hazard(w) if point.accepted else model.reverse_hazard(w)
    return scalar * point.x


def point_hessian(point: LossPoint, theta, model: NoiseModel) -> np.ndarray:
    w = _margin(point, theta)
    curv = model.log_sf_curvature(w) if point.accepted else model.log_cdf_curvature(w)
    return curv * np.outer(point.x, point.x)


class BatchObjective:
    """Average negative log-likelihood of a batch of rounds."""

    def __init__(self, features, prices, accepted, model: NoiseModel):
        self.features = np.atleast_2d(np.asarray(features, dtype=float))
        self.prices = np.asarray(prices, dtype=float).ravel()
        self.accepted = np.asarray(accepted, dtype=bool).ravel()
        self.model = model
        n = self.features.shape[0]
        if not (self.prices.shape[0] == n and self.accepted.shape[0] == n):
            raise ValueError("features, prices and indicators must have equal length")
        if n == 0:
            raise ValueError("batch must be nonempty")

    @classmethod
    def from_points(cls, points, model: NoiseModel) -> "BatchObjective":
        pts = list(points)
        return cls(
            np.stack([p.x for p in pts]),
            np.array([p.price for p in pts]),
            np.array([p.accepted for p in pts]),
            model,
        )

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def max_feature_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.features, axis=1)))

    def margins(self, theta) -> np.ndarray:
        return self.prices - self.features @ np.asarray(theta, dtype=float)

    def value(self, theta) -> float:
        w = self.margins(theta)
        terms = np.where(self.accepted, -self.model.log_sf(w), -self.model.log_cdf(w))
        return float(np.mean(terms))

    def gradient(self, theta) -> np.ndarray:
        w = self.margins(theta)
        scalars = np.where(
            self.accepted,
            -np.asarray(self.model.hazard(w)),
            np.asarray(self.model.reverse_hazard(w)),
        )
        return (scalars @ self.features) / len(self)


@dataclass
class MleResult:
    theta: np.ndarray
    converged: bool
    iterations: int
    objective: float


def curvature_step_bound(batch: BatchObjective, region: Region) -> float:
    """Gradient-Lipschitz bound c_exp * (max ||x||)^2 over the batch."""
    r = batch.max_feature_norm
    if r == 0.0:
        return 0.0
    constants = compute_constants(batch.model, region.radius * r)
    return constants.c_exp * r * r


def solve_mle(
    batch: BatchObjective,
    region: Region,
    theta_init,
    tol: float = 1e-9,
    max_iter: int = 100_000,
    step_bound: float | None = None,
) -> MleResult:
    """Constrained batch MLE by projected gradient with momentum.

    Fixed step 1/L (L = curvature bound over the batch) with Nesterov
    momentum; the momentum is restarted and the step halved (Armijo test,
    constant 1e-4) whenever a step would increase the objective beyond float
    noise, so the objective is monotone up to machine precision.  Converged
    means the gradient-mapping norm ||theta - P(theta - s g)||/s at the base
    step s = 1/L drops below ``tol``.  Hitting the iteration cap returns the
    best iterate with ``converged=False``; callers surface that as a
    warning, not a failure.
    """
    theta = region.project(np.asarray(theta_init, dtype=float))
    ell = curvature_step_bound(batch, region) if step_bound is None else step_bound
    if ell <= 0.0:
        # all-zero features: objective is constant in theta
        return MleResult(theta, True, 0, batch.value(theta))

    base = 1.0 / ell
    value = batch.value(theta)
    noise_floor = 1e-14 * max(1.0, abs(value))

    def mapping_gap(point: np.ndarray) -> float:
        image = region.project(point - base * batch.gradient(point))
        return float(np.linalg.norm(point - image)) / base

    momentum_from = theta
    tk = 1.0
    iterations = 0
    converged = False
    stationary = False
    for iterations in range(1, max_iter + 1):
        lookahead = theta + ((tk - 1.0) / (0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk)))) * (
            theta - momentum_from
        )
        candidate = region.project(lookahead - base * batch.gradient(lookahead))
        cand_value = batch.value(candidate)
        if cand_value <= value + noise_floor:
            momentum_from = theta
            tk = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            theta, value = candidate, min(value, cand_value)
        else:
            # momentum overshoot or too-optimistic step: restart and backtrack
            tk = 1.0
            momentum_from = theta
            grad = batch.gradient(theta)
            step = base
            trial = region.project(theta - step * grad)
            trial_value = batch.value(trial)
            for _ in range(60):
                move = trial - theta
                if trial_value <= value - (ARMIJO / step) * float(move @ move) + noise_floor:
                    break
                step *= 0.5
                trial = region.project(theta - step * grad)
                trial_value = batch.value(trial)
            if trial_value > value + noise_floor:
                stationary = True  # no representable descent direction left
            else:
                theta, value = trial, min(value, trial_value)
        if stationary or iterations % 16 == 0:
            gap = mapping_gap(theta)
            if gap <= tol or stationary:
                converged = gap <= max(tol, 1e-6)
                break
    else:
        converged = mapping_gap(theta) <= tol
    return MleResult(theta, converged, iterations, value)
