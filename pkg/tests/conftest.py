import numpy as np
import pytest

from pricelab import GaussianNoise, LogisticNoise, OrthantBall, PricingProblem


@pytest.fixture
def gauss1():
    return GaussianNoise(1.0)


@pytest.fixture
def gauss025():
    return GaussianNoise(0.25)


@pytest.fixture
def logistic1():
    return LogisticNoise(1.0)


@pytest.fixture
def problem(gauss025):
    """The reference market: d=2, B1=B2=1, sigma=0.25, theta*=(0.5, 0.5)."""
    return PricingProblem(
        model=gauss025,
        region=OrthantBall(radius=1.0, dim=2),
        theta_star=np.array([0.5, 0.5]),
        feature_bound=1.0,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
