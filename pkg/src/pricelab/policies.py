"""Online pricing policies.

All policies speak the same two-phase, per-round protocol:

    price = policy.propose(x)      # post a price for feature vector x
    policy.feedback(accepted)      # observe the binary sale outcome

plus ``reset(seed)`` for a fresh, reproducible run.  Every proposed price
lies in [0, V_max] with V_max = B + J(0).  ``state_snapshot()`` returns the
mutable state (epoch counter and estimate, Newton matrix, expert weights) as
plain JSON-serializable types.

EmlpPolicy   - epoch-doubling batch maximum-likelihood pricing: prices each
               epoch greedily under the previous epoch's MLE, refits at
               epoch boundaries only (O(log T) policy switches).
OnspPolicy   - per-round online Newton step on the sale likelihood with a
               rank-one updated matrix, Woodbury-maintained inverse, and
               matrix-weighted projection back onto the feasible set.
Exp4Policy   - discretized experts-and-arms baseline: a parameter grid of
               experts each recommending the arm nearest its greedy price,
               exponential weights over importance-weighted rewards.
OraclePolicy - prices greedily under the true parameter (the regret
               comparator).
"""

from __future__ import annotations

import abc
import math
from typing import NamedTuple

import numpy as np

from .loss import BatchObjective, LossPoint, point_gradient, solve_mle
from .noise import NoiseModel
from .pricing import AnalysisConstants, compute_constants, greedy_price, greedy_price_vec, price_cap
from .regions import OrthantBall, Region

__all__ = [
    "PricingPolicy",
    "EmlpPolicy",
    "OnspPolicy",
    "Exp4Policy",
    "OraclePolicy",
    "EpochRecord",
    "onsp_default_hyperparams",
]


def onsp_default_hyperparams(constants: AnalysisConstants, b1: float, b2: float) -> tuple[float, float]:
    """Theory-default Newton-step hyperparameters (gamma, epsilon).

    gamma = 0.5*min{1/(4GD), alpha} and epsilon = 1/(gamma^2 D^2) with
    D = 2*B1 (diameter) and G = sqrt(c_exp)*B2 (gradient bound).  At small
    noise scales these are far too conservative for desk-scale horizons;
    experiment configs override them.
    """
    diameter = 2.0 * b1
    grad_bound = math.sqrt(constants.c_exp) * b2
    gamma = 0.5 * min(1.0 / (4.0 * grad_bound * diameter), constants.alpha)
    epsilon = 1.0 / (gamma**2 * diameter**2)
    return gamma, epsilon


class PricingPolicy(abc.ABC):
    """Two-phase online policy base: propose exactly once, then feedback."""

    name: str = "policy"

    def __init__(self, model: NoiseModel, region: Region, feature_bound: float):
        if feature_bound <= 0:
            raise ValueError("feature bound must be positive")
        self.model = model
        self.region = region
        self.feature_bound = feature_bound
        self.valuation_bound = region.radius * feature_bound
        self.price_cap = price_cap(model, self.valuation_bound)
        self._rng = np.random.default_rng()
        self._pending: tuple[np.ndarray, float] | None = None
        self._reset_state()

    # -- protocol ------------------------------------------------------------

    def reset(self, seed=None) -> None:
        self._rng = np.random.default_rng(seed)
        self._pending = None
        self._reset_state()

    def propose(self, x) -> float:
        if self._pending is not None:
            raise RuntimeError("propose called twice without feedback")
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise ValueError("feature must be a finite 1-d vector")
        price = float(self._propose(x))
        if not (0.0 <= price <= self.price_cap * (1.0 + 1e-9) + 1e-12):
            raise RuntimeError(f"{self.name} priced {price} outside [0, {self.price_cap}]")
        self._pending = (x, price)
        return price

    def feedback(self, accepted) -> None:
        if self._pending is None:
            raise RuntimeError("feedback without a pending propose")
        x, price = self._pending
        self._pending = None
        self._feedback(LossPoint(x, price, bool(accepted)))

    def clipped_valuation(self, x, theta) -> float:
        # x'theta lies in [0, B] for theta in H by assumption; clamp is a
        # numerical guard only.
        return float(np.clip(x @ theta, 0.0, self.valuation_bound))

    # -- subclass hooks --------------------------------------------------------

    @abc.abstractmethod
    def _reset_state(self) -> None: ...

    @abc.abstractmethod
    def _propose(self, x: np.ndarray) -> float: ...

    @abc.abstractmethod
    def _feedback(self, point: LossPoint) -> None: ...

    @abc.abstractmethod
    def state_snapshot(self) -> dict: ...


class EpochRecord(NamedTuple):
    """One completed pricing epoch: which estimate priced it, on what data."""

    index: int
    length: int
    theta_used: np.ndarray
    batch: BatchObjective


class EmlpPolicy(PricingPolicy):
    """Epoch-doubling maximum-likelihood pricing.

    Round 1 posts a uniform random price in [0, V_max] and fits the first
    estimate on that single observation.  Epoch k then lasts 2^(k-1) rounds,
    prices J(x'theta_k) throughout, and refits on exactly that epoch's batch
    at the boundary (warm-started at the current estimate).
    """

    name = "emlp"

    def __init__(self, model, region, feature_bound, mle_tol: float = 1e-9):
        self.mle_tol = mle_tol
        self._constants: AnalysisConstants | None = None
        super().__init__(model, region, feature_bound)

    def _reset_state(self) -> None:
        self.epoch = 0  # 0 = bootstrap round not yet played
        self.epoch_length = 1
        self.position = 0
        self.theta = self.region.interior_point()
        self.mle_warnings = 0
        self.epoch_log: list[EpochRecord] = []
        self._points: list[LossPoint] = []

    def _step_bound(self, batch: BatchObjective) -> float:
        if self._constants is None:
            self._constants = compute_constants(self.model, self.valuation_bound)
        # c_exp over the full window majorizes any sub-batch's curvature
        return self._constants.c_exp * batch.max_feature_norm**2

    def _solve(self, batch: BatchObjective, init: np.ndarray) -> np.ndarray:
        result = solve_mle(
            batch, self.region, init, tol=self.mle_tol, step_bound=self._step_bound(batch)
        )
        if not result.converged:
            self.mle_warnings += 1
        return result.theta

    def _propose(self, x: np.ndarray) -> float:
        if self.epoch == 0:
            return self._rng.uniform(0.0, self.price_cap)
        return greedy_price(self.model, self.clipped_valuation(x, self.theta))

    def _feedback(self, point: LossPoint) -> None:
        if self.epoch == 0:
            batch = BatchObjective.from_points([point], self.model)
            self.theta = self._solve(batch, self.region.interior_point())
            self.epoch = 1
            self.epoch_length = 1
            self.position = 0
            self._points = []
            return
        self._points.append(point)
        self.position += 1
        if self.position == self.epoch_length:
            batch = BatchObjective.from_points(self._points, self.model)
            self.epoch_log.append(
                EpochRecord(self.epoch, self.epoch_length, self.theta.copy(), batch)
            )
            self.theta = self._solve(batch, self.theta)
            self.epoch += 1
            self.epoch_length *= 2
            self.position = 0
            self._points = []

    @property
    def switch_count(self) -> int:
        """Number of distinct estimates adopted so far."""
        return (1 if self.epoch >= 1 else 0) + len(self.epoch_log)

    def state_snapshot(self) -> dict:
        return {
            "kind": self.name,
            "epoch": self.epoch,
            "epoch_length": self.epoch_length,
            "position": self.position,
            "theta": self.theta.tolist(),
            "mle_warnings": self.mle_warnings,
        }


class OnspPolicy(PricingPolicy):
    """Online Newton-step pricing on the sale likelihood.

    Per round: price J(x'theta_t); after the outcome, rank-one update
    A += g g', Newton step theta - (1/gamma) A^{-1} g, and A-weighted
    projection back onto the feasible set.  A^{-1} is maintained by the
    rank-one inverse identity and re-synced by direct inversion every
    ``refresh_every`` rounds to keep float drift below 1e-8.
    """

    name = "onsp"

    def __init__(
        self,
        model,
        region,
        feature_bound,
        gamma: float | None = None,
        epsilon: float | None = None,
        theta_init=None,
        refresh_every: int = 4096,
    ):
        if (gamma is None) != (epsilon is None):
            raise ValueError("override gamma and epsilon together or not at all")
        if gamma is None:
            constants = compute_constants(model, region.radius * feature_bound)
            gamma, epsilon = onsp_default_hyperparams(constants, region.radius, feature_bound)
        if gamma <= 0 or epsilon <= 0:
            raise ValueError("gamma and epsilon must be positive")
        self.gamma = float(gamma)
        self.epsilon = float(epsilon)
        self.refresh_every = refresh_every
        self._theta_init = None if theta_init is None else np.asarray(theta_init, dtype=float)
        super().__init__(model, region, feature_bound)

    def _reset_state(self) -> None:
        dim = self.region.dim
        start = self.region.interior_point() if self._theta_init is None else self._theta_init
        self.theta = self.region.project(start)
        self.matrix = self.epsilon * np.eye(dim)
        self.matrix_inv = np.eye(dim) / self.epsilon
        self.rounds = 0

    def _propose(self, x: np.ndarray) -> float:
        return greedy_price(self.model, self.clipped_valuation(x, self.theta))

    def _feedback(self, point: LossPoint) -> None:
        grad = point_gradient(point, self.theta, self.model)
        self.matrix = self.matrix + np.outer(grad, grad)
        # rank-one inverse update: (A + gg')^{-1} = A^{-1} - (A^{-1}g)(A^{-1}g)'/(1+g'A^{-1}g)
        ag = self.matrix_inv @ grad
        self.matrix_inv = self.matrix_inv - np.outer(ag, ag) / (1.0 + float(grad @ ag))
        self.matrix_inv = 0.5 * (self.matrix_inv + self.matrix_inv.T)
        self.rounds += 1
        if self.rounds % self.refresh_every == 0:
            self.matrix_inv = np.linalg.inv(self.matrix)
        newton = self.theta - (self.matrix_inv @ grad) / self.gamma
        self.theta = self.region.project_weighted(newton, self.matrix)

    def state_snapshot(self) -> dict:
        return {
            "kind": self.name,
            "theta": self.theta.tolist(),
            "matrix": self.matrix.tolist(),
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "rounds": self.rounds,
        }


class Exp4Policy(PricingPolicy):
    """Exponential-weights baseline over a discretized parameter/price grid.

    The horizon must be known in advance: both grids use spacing
    (scale) * T^{-1/3}.  Experts are the grid points of the feasible set;
    each deterministically recommends the arm nearest its greedy price.  The
    played arm is drawn from the weight mixture of recommendations blended
    with uniform exploration; the chosen arm's importance-weighted reward
    (r/V_max)/p(arm) updates every expert that recommended it.

    Defaults: learning rate eta = sqrt(2 ln N / (T K)), exploration K*eta.
    """

    name = "exp4"

    def __init__(
        self,
        model,
        region,
        feature_bound,
        horizon: int,
        exploration: float | None = None,
        learning_rate: float | None = None,
    ):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.horizon = int(horizon)
        super().__init__(model, region, feature_bound)
        per_axis = int(math.floor(self.horizon ** (1.0 / 3.0) + 1e-9)) + 1
        self.experts = self._parameter_grid(per_axis)
        self.arms = np.linspace(0.0, self.price_cap, per_axis)
        self.arm_spacing = self.arms[1] - self.arms[0] if per_axis > 1 else self.price_cap
        n, k = len(self.experts), len(self.arms)
        self.learning_rate = (
            math.sqrt(2.0 * math.log(max(n, 2)) / (self.horizon * k))
            if learning_rate is None
            else float(learning_rate)
        )
        self.exploration = (
            min(1.0, k * self.learning_rate) if exploration is None else float(exploration)
        )
        self._reset_state()

    def _parameter_grid(self, per_axis: int) -> np.ndarray:
        region = self.region
        if isinstance(region, OrthantBall):
            axes = [np.linspace(0.0, region.radius, per_axis)] * region.dim
        else:  # Ball: cover [center - r, center + r] at the same spacing
            span = np.linspace(-region.radius, region.radius, 2 * per_axis - 1)
            center = np.asarray(region.center, dtype=float)
            axes = [center[i] + span for i in range(region.dim)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, region.dim)
        points = [p for p in mesh if region.contains(p, tol=1e-9)]
        if not points:
            points.append(region.interior_point())
        return np.asarray(points)

    def _reset_state(self) -> None:
        if not hasattr(self, "experts"):
            return  # base __init__ calls this before grids exist
        self.weights = np.full(len(self.experts), 1.0 / len(self.experts))
        self.clip_events = 0
        self._last: tuple[np.ndarray, np.ndarray, int] | None = None

    def recommendations(self, x: np.ndarray) -> np.ndarray:
        """Arm index each expert recommends for feature x."""
        u = np.clip(self.experts @ x, 0.0, self.valuation_bound)
        prices = greedy_price_vec(self.model, u)
        if len(self.arms) == 1:
            return np.zeros(len(prices), dtype=int)
        idx = np.rint(prices / self.arm_spacing).astype(int)
        return np.clip(idx, 0, len(self.arms) - 1)

    def arm_distribution(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rec = self.recommendations(x)
        mixture = np.bincount(rec, weights=self.weights, minlength=len(self.arms))
        mixture = mixture / mixture.sum()
        probs = (1.0 - self.exploration) * mixture + self.exploration / len(self.arms)
        return rec, probs / probs.sum()

    def _propose(self, x: np.ndarray) -> float:
        rec, probs = self.arm_distribution(x)
        arm = int(self._rng.choice(len(self.arms), p=probs))
        self._last = (rec, probs, arm)
        return float(self.arms[arm])

    def _feedback(self, point: LossPoint) -> None:
        rec, probs, arm = self._last
        self._last = None
        reward = point.price if point.accepted else 0.0
        prob = float(probs[arm])
        if prob < 1e-12:
            prob = 1e-12
            self.clip_events += 1
        estimate = (reward / self.price_cap) / prob
        # eta*estimate <= 1 whenever exploration = K*eta; the clamp guards
        # the clipped-probability path only
        boost = math.exp(min(self.learning_rate * estimate, 50.0))
        self.weights = np.where(rec == arm, self.weights * boost, self.weights)
        self.weights = self.weights / self.weights.sum()

    def state_snapshot(self) -> dict:
        return {
            "kind": self.name,
            "weights": self.weights.tolist(),
            "arms": self.arms.tolist(),
            "n_experts": len(self.experts),
            "learning_rate": self.learning_rate,
            "exploration": self.exploration,
            "clip_events": self.clip_events,
        }


class OraclePolicy(PricingPolicy):
    """Greedy pricing under the true parameter: the regret comparator."""

    name = "oracle"

    def __init__(self, model, region, feature_bound, theta_star):
        self.theta_star = np.asarray(theta_star, dtype=float)
        super().__init__(model, region, feature_bound)

    def _reset_state(self) -> None:
        pass

    def _propose(self, x: np.ndarray) -> float:
        return greedy_price(self.model, self.clipped_valuation(x, self.theta_star))

    def _feedback(self, point: LossPoint) -> None:
        pass

    def state_snapshot(self) -> dict:
        return {"kind": self.name, "theta": self.theta_star.tolist()}
