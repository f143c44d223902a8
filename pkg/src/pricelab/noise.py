"""Noise distributions for customer valuations.

Both shipped laws (Gaussian, logistic) are strictly log-concave: the second
derivatives of log F and log(1-F) are strictly negative everywhere, which is
what makes the per-round sale likelihood strongly curved along the observed
feature direction and the whole pricing machinery work.

Everything tail-sensitive is computed in log space.  The quantities that blow
up a naive implementation are 1-F(w) (underflows in double precision near 38
standard units) and the hazard f/(1-F) (0/0 in the right tail); here they go
through ``log_sf``/``log_pdf`` or, for the Gaussian, through the scaled
complementary error function, so they stay accurate to ~1e-15 relative error
over the whole working range |w| <= 40 standard units.  Beyond 45 standard
units the Gaussian hazard switches to its asymptote w + 1/w and the result is
flagged as saturated.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

__all__ = [
    "NoiseModel",
    "GaussianNoise",
    "LogisticNoise",
    "HazardResult",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)

# Standardized argument beyond which the Gaussian hazard is replaced by its
# asymptote; 1-F underflows near 38, so exact evaluation is moot out there.
HAZARD_SATURATION = 45.0


class HazardResult(NamedTuple):
    """Hazard value plus a flag marking saturated (asymptotic) evaluation."""

    value: float | np.ndarray
    saturated: bool | np.ndarray


def _check_finite(omega) -> np.ndarray:
    arr = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("noise argument must be finite")
    return arr


def _like(omega, out: np.ndarray):
    return float(out) if np.ndim(omega) == 0 else out


class NoiseModel(abc.ABC):
    """Zero-mean noise law with stable CDF/PDF/tail/hazard evaluation.

    Subclasses provide the scalar kernels; all public methods accept floats
    or arrays and validate finiteness.  Instances are immutable and safe to
    share; samplers take an explicit ``numpy.random.Generator``.
    """

    # -- primitive kernels -------------------------------------------------

    @abc.abstractmethod
    def _cdf(self, z: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _log_cdf(self, z: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _log_pdf(self, z: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _mills(self, z: np.ndarray) -> np.ndarray:
        """(1-F)/f on the standardized scale."""

    @abc.abstractmethod
    def _mills_slope(self, z: np.ndarray) -> np.ndarray:
        """d/dz of the standardized Mills ratio; always > -1."""

    @property
    @abc.abstractmethod
    def spread(self) -> float:
        """Standardizing scale (sigma for Gaussian, s for logistic)."""

    # -- distribution surface ----------------------------------------------

    def cdf(self, omega):
        arr = _check_finite(omega)
        return _like(omega, self._cdf(arr / self.spread))

    def sf(self, omega):
        arr = _check_finite(omega)
        return _like(omega, self._cdf(-arr / self.spread))

    def log_cdf(self, omega):
        arr = _check_finite(omega)
        return _like(omega, self._log_cdf(arr / self.spread))

    def log_sf(self, omega):
        arr = _check_finite(omega)
        return _like(omega, self._log_cdf(-arr / self.spread))

    def log_pdf(self, omega):
        arr = _check_finite(omega)
        return _like(omega, self._log_pdf(arr / self.spread) - math.log(self.spread))

    def pdf(self, omega):
        arr = _check_finite(omega)
        return _like(omega, np.exp(self._log_pdf(arr / self.spread)) / self.spread)

    def pdf_derivative(self, omega):
        arr = _check_finite(omega)
        return _like(omega, self.pdf(arr) * self.log_pdf_slope(arr))

    @abc.abstractmethod
    def log_pdf_slope(self, omega):
        """f'(w)/f(w), the derivative of log f."""

    def mills_ratio(self, omega):
        """(1 - F(w))/f(w), stable in both tails (may overflow to inf far left)."""
        arr = _check_finite(omega)
        return _like(omega, self.spread * self._mills(arr / self.spread))

    def hazard(self, omega):
        """f(w)/(1 - F(w)); see :meth:`hazard_detail` for the saturation flag."""
        return self.hazard_detail(omega).value

    def hazard_detail(self, omega) -> HazardResult:
        arr = _check_finite(omega)
        z = arr / self.spread
        saturated = z > HAZARD_SATURATION
        safe = np.where(saturated, 0.0, z)
        value = 1.0 / (self.spread * self._mills(safe))
        if np.any(saturated):
            asym = (z + 1.0 / np.where(saturated, z, 1.0)) / self.spread
            value = np.where(saturated, asym, value)
        return HazardResult(_like(omega, value), _like(omega, saturated) if np.ndim(omega) else bool(saturated))

    def reverse_hazard(self, omega):
        """f(w)/F(w)."""
        arr = _check_finite(omega)
        return _like(omega, np.exp(self.log_pdf(arr) - self.log_cdf(arr)))

    # -- log-concavity curvatures -------------------------------------------
    # -d^2 log(1-F)/dw^2 = h^2 + (f'/f) h       with h = f/(1-F)
    # -d^2 log F/dw^2    = r^2 - (f'/f) r       with r = f/F
    # Both are strictly positive for strictly log-concave F.

    def log_sf_curvature(self, omega):
        h = np.asarray(self.hazard(omega))
        return _like(omega, h * (h + np.asarray(self.log_pdf_slope(omega))))

    def log_cdf_curvature(self, omega):
        r = np.asarray(self.reverse_hazard(omega))
        return _like(omega, r * (r - np.asarray(self.log_pdf_slope(omega))))

    # -- sampling ------------------------------------------------------------

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, size=None):
        """Draw noise; deterministic given the generator state."""

    @property
    @abc.abstractmethod
    def variance(self) -> float: ...

    @property
    @abc.abstractmethod
    def b_f(self) -> float:
        """sup of the density."""

    @property
    @abc.abstractmethod
    def b_fprime(self) -> float:
        """sup of |f'|."""


@dataclass(frozen=True)
class GaussianNoise(NoiseModel):
    """N(0, sigma^2) valuation noise.

    Tails go through scipy's erfc-based ``ndtr``/``log_ndtr`` and the scaled
    complementary error function: (1-Phi(z))/phi(z) = sqrt(pi/2)*erfcx(z/sqrt2),
    which neither under- nor overflows anywhere we evaluate it.
    """

    sigma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be a positive real")

    @property
    def spread(self) -> float:
        return self.sigma

    @property
    def variance(self) -> float:
        return self.sigma**2

    @property
    def b_f(self) -> float:
        return 1.0 / (self.sigma * math.sqrt(2.0 * math.pi))

    @property
    def b_fprime(self) -> float:
        return 1.0 / (self.sigma**2 * math.sqrt(2.0 * math.pi * math.e))

    def _cdf(self, z):
        return special.ndtr(z)

    def _log_cdf(self, z):
        return special.log_ndtr(z)

    def _log_pdf(self, z):
        return -0.5 * z * z - _LOG_SQRT_2PI

    def _mills(self, z):
        return _SQRT_HALF_PI * special.erfcx(z / math.sqrt(2.0))

    def _mills_slope(self, z):
        return z * self._mills(z) - 1.0

    def log_pdf_slope(self, omega):
        arr = _check_finite(omega)
        return _like(omega, -arr / self.sigma**2)

    def sample(self, rng, size=None):
        return rng.normal(0.0, self.sigma, size)


@dataclass(frozen=True)
class LogisticNoise(NoiseModel):
    """Logistic(0, s) valuation noise; every tail quantity has a closed form.

    Hazard is F(w)/s, bounded and increasing, so it never needs the
    saturation fallback.
    """

    scale: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be a positive real")

    @property
    def spread(self) -> float:
        return self.scale

    @property
    def variance(self) -> float:
        return math.pi**2 * self.scale**2 / 3.0

    @property
    def b_f(self) -> float:
        return 1.0 / (4.0 * self.scale)

    @property
    def b_fprime(self) -> float:
        # max of |f'| = max over p of p(1-p)|1-2p|/s^2 at p = 1/2 +- sqrt(3)/6
        return math.sqrt(3.0) / (18.0 * self.scale**2)

    def _cdf(self, z):
        return special.expit(z)

    def _log_cdf(self, z):
        return special.log_expit(z)

    def _log_pdf(self, z):
        a = np.abs(z)
        return -(a + 2.0 * np.log1p(np.exp(-a)))

    def _mills(self, z):
        # (1-F)/f = 1 + exp(-z) on the standardized scale
        return 1.0 + np.exp(-z)

    def _mills_slope(self, z):
        return -np.exp(-z)

    def log_pdf_slope(self, omega):
        arr = _check_finite(omega)
        return _like(omega, (1.0 - 2.0 * special.expit(arr / self.scale)) / self.scale)

    def hazard_detail(self, omega) -> HazardResult:
        arr = _check_finite(omega)
        value = special.expit(arr / self.scale) / self.scale
        sat = np.zeros(np.shape(arr), dtype=bool)
        return HazardResult(_like(omega, value), _like(omega, sat) if np.ndim(omega) else False)

    def sample(self, rng, size=None):
        return rng.logistic(0.0, self.scale, size)
