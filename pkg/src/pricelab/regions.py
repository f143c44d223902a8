"""Bounded convex parameter sets with Euclidean and matrix-weighted projection.

Two kinds are supported: a Euclidean ball, and the intersection of a
centered ball with the nonnegative orthant (which keeps x'theta >= 0 for
nonnegative features).  The weighted projection argmin (theta-y)'A(theta-y)
is what the Newton-step policy applies after each update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Ball", "OrthantBall", "Region"]


def _as_vector(theta) -> np.ndarray:
    arr = np.asarray(theta, dtype=float)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ValueError("parameter must be a finite 1-d vector")
    return arr


def _check_weight_matrix(a: np.ndarray, dim: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (dim, dim):
        raise ValueError(f"weight matrix must be {dim}x{dim}")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("weight matrix must be symmetric")
    if np.min(np.linalg.eigvalsh(a)) <= 0.0:
        raise ValueError("weight matrix must be positive definite")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class Ball:
    """{theta : ||theta - center|| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def interior_point(self) -> np.ndarray:
        return self.center.copy()

    def contains(self, theta, tol: float = 1e-12) -> bool:
        theta = _as_vector(theta)
        return float(np.linalg.norm(theta - self.center)) <= self.radius * (1.0 + tol) + tol

    def project(self, theta) -> np.ndarray:
        theta = _as_vector(theta)
        gap = theta - self.center
        norm = float(np.linalg.norm(gap))
        if norm <= self.radius:
            return theta.copy()
        return self.center + gap * (self.radius / norm)

    def project_weighted(self, theta, a, tol: float = 1e-12) -> np.ndarray:
        """A-norm projection via the KKT form theta(mu) = (A+mu I)^{-1}(A y + mu c).

        ||theta(mu) - center|| decreases in mu >= 0, so the multiplier is
        found by bisection until the boundary is hit to ``tol``.
        """
        theta = _as_vector(theta)
        a = _check_weight_matrix(a, self.dim)
        if self.contains(theta):
            return theta.copy()

        ay = a @ theta

        def point(mu: float) -> np.ndarray:
            return np.linalg.solve(a + mu * np.eye(self.dim), ay + mu * self.center)

        mu_lo, mu_hi = 0.0, 1.0
        for _ in range(200):
            if np.linalg.norm(point(mu_hi) - self.center) <= self.radius:
                break
            mu_hi *= 4.0
        for _ in range(300):
            mu = 0.5 * (mu_lo + mu_hi)
            candidate = point(mu)
            if np.linalg.norm(candidate - self.center) > self.radius:
                mu_lo = mu
            else:
                mu_hi = mu
            if mu_hi - mu_lo < tol * max(1.0, mu_hi) and abs(np.linalg.norm(candidate - self.center) - self.radius) < tol:
                break
        out = point(mu_hi)
        # land exactly inside
        gap = out - self.center
        norm = float(np.linalg.norm(gap))
        if norm > self.radius:
            out = self.center + gap * (self.radius / norm)
        return out


@dataclass(frozen=True)
class OrthantBall:
    """{theta : theta >= 0, ||theta|| <= radius} (ball centered at the origin)."""

    radius: float
    dim: int = 2

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be positive")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def center(self) -> np.ndarray:
        return np.zeros(self.dim)

    def interior_point(self) -> np.ndarray:
        return np.full(self.dim, self.radius / (2.0 * math.sqrt(self.dim)))

    def contains(self, theta, tol: float = 1e-12) -> bool:
        theta = _as_vector(theta)
        return bool(np.all(theta >= -tol) and np.linalg.norm(theta) <= self.radius * (1.0 + tol) + tol)

    def project(self, theta) -> np.ndarray:
        # Clip to the orthant, then scale radially: exact for cone-ball
        # intersections because clipping is the projection onto the cone and
        # commutes with the radial scaling.
        theta = _as_vector(theta)
        clipped = np.maximum(theta, 0.0)
        norm = float(np.linalg.norm(clipped))
        if norm <= self.radius:
            return clipped
        return clipped * (self.radius / norm)

    def project_weighted(self, theta, a, tol: float = 1e-13, max_iter: int = 500) -> np.ndarray:
        """A-norm projection by projected gradient on the quadratic.

        Step size 1/tr(A) (trace bounds the top eigenvalue); capped at
        ``max_iter`` sweeps, returning the best feasible iterate found.
        """
        theta = _as_vector(theta)
        a = _check_weight_matrix(a, self.dim)
        if self.contains(theta):
            return theta.copy()
        step = 1.0 / float(np.trace(a))
        cur = self.project(theta)
        for _ in range(max_iter):
            nxt = self.project(cur - step * (a @ (cur - theta)))
            if float(np.linalg.norm(nxt - cur)) < tol:
                cur = nxt
                break
            cur = nxt
        return cur


Region = Ball | OrthantBall
