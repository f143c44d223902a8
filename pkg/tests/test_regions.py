"""Feasible sets: Euclidean and matrix-weighted projections."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pricelab import Ball, OrthantBall

finite_coord = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)
vector2 = st.tuples(finite_coord, finite_coord).map(np.array)


@pytest.fixture
def ball():
    return Ball(np.zeros(2), 1.0)


@pytest.fixture
def orthant():
    return OrthantBall(1.0, 2)


class TestEuclideanProjection:
    def test_identity_inside(self, ball, orthant):
        theta = np.array([0.3, 0.4])
        np.testing.assert_array_equal(ball.project(theta), theta)
        np.testing.assert_array_equal(orthant.project(theta), theta)

    def test_ball_radial_scaling(self, ball):
        np.testing.assert_allclose(ball.project(np.array([3.0, 4.0])), [0.6, 0.8], rtol=1e-15)

    def test_ball_with_center(self):
        region = Ball(np.array([1.0, 1.0]), 0.5)
        out = region.project(np.array([1.0, 2.0]))
        np.testing.assert_allclose(out, [1.0, 1.5], rtol=1e-14)

    def test_orthant_clip_then_scale(self, orthant):
        np.testing.assert_allclose(orthant.project(np.array([-1.0, 2.0])), [0.0, 1.0], rtol=1e-14)

    def test_orthant_against_brute_force(self, orthant, rng):
        # dense enumeration of the feasible set as the distance oracle
        grid_1d = np.linspace(0.0, 1.0, 401)
        gx, gy = np.meshgrid(grid_1d, grid_1d)
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        pts = pts[np.linalg.norm(pts, axis=1) <= 1.0]
        for _ in range(25):
            target = rng.uniform(-2, 2, 2)
            ours = orthant.project(target)
            best = pts[np.argmin(np.linalg.norm(pts - target, axis=1))]
            assert np.linalg.norm(ours - target) <= np.linalg.norm(best - target) + 1e-9
            # grid quantization along the curved boundary allows lateral
            # slack up to ~sqrt(2 r h)
            assert np.linalg.norm(ours - best) <= np.sqrt(2.0 * grid_1d[1]) + 1e-9

    def test_nonexpansive(self, ball, orthant, rng):
        for region in (ball, orthant):
            for _ in range(200):
                a, b = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
                assert np.linalg.norm(region.project(a) - region.project(b)) <= np.linalg.norm(a - b) + 1e-12

    def test_idempotent(self, ball, orthant, rng):
        for region in (ball, orthant):
            for _ in range(100):
                once = region.project(rng.uniform(-3, 3, 2))
                np.testing.assert_allclose(region.project(once), once, atol=1e-14)

    @given(target=vector2)
    @settings(max_examples=200, deadline=None)
    def test_projection_properties_hold_everywhere(self, target):
        for region in (Ball(np.zeros(2), 1.0), OrthantBall(1.0, 2)):
            projected = region.project(target)
            assert region.contains(projected, tol=1e-10)
            np.testing.assert_allclose(region.project(projected), projected, atol=1e-12)

    @given(a=vector2, b=vector2)
    @settings(max_examples=200, deadline=None)
    def test_projection_nonexpansive_everywhere(self, a, b):
        for region in (Ball(np.zeros(2), 1.0), OrthantBall(1.0, 2)):
            lhs = np.linalg.norm(region.project(a) - region.project(b))
            assert lhs <= np.linalg.norm(a - b) + 1e-10


class TestWeightedProjection:
    def test_interior_point_unchanged(self, ball, orthant):
        a = np.array([[4.0, 1.0], [1.0, 2.0]])
        theta = np.array([0.2, 0.1])
        for region in (ball, orthant):
            np.testing.assert_array_equal(region.project_weighted(theta, a), theta)

    def test_identity_weight_reduces_to_euclidean(self, ball, orthant, rng):
        eye = np.eye(2)
        for region in (ball, orthant):
            for _ in range(50):
                target = rng.uniform(-2, 2, 2)
                np.testing.assert_allclose(
                    region.project_weighted(target, eye), region.project(target), atol=1e-10
                )

    def test_axis_aligned_kkt_case(self, ball):
        # weight diag(4, 1) and target (2, 0): the constrained optimum sits
        # on the axis at the boundary
        out = ball.project_weighted(np.array([2.0, 0.0]), np.diag([4.0, 1.0]))
        np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-9)

    def test_membership(self, ball, orthant, rng):
        a = np.array([[3.0, 0.5], [0.5, 1.0]])
        for region in (ball, orthant):
            for _ in range(100):
                out = region.project_weighted(rng.uniform(-2, 2, 2), a)
                assert region.contains(out, tol=1e-12)

    def test_variational_inequality(self, ball, orthant, rng):
        for region in (ball, orthant):
            for _ in range(50):
                m = rng.standard_normal((2, 2))
                a = m @ m.T + 0.2 * np.eye(2)
                target = rng.uniform(-2, 2, 2)
                sol = region.project_weighted(target, a)
                for _ in range(100):
                    other = region.project(rng.uniform(-1.5, 1.5, 2))
                    assert float((other - sol) @ (a @ (sol - target))) >= -1e-8

    def test_a_norm_nonexpansive(self, ball, rng):
        m = rng.standard_normal((2, 2))
        a = m @ m.T + 0.3 * np.eye(2)

        def a_norm(v):
            return float(np.sqrt(v @ (a @ v)))

        for _ in range(100):
            p, q = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
            pp, qq = ball.project_weighted(p, a), ball.project_weighted(q, a)
            assert a_norm(pp - qq) <= a_norm(p - q) + 1e-8

    def test_rejects_bad_weight(self, ball):
        with pytest.raises(ValueError):
            ball.project_weighted(np.array([2.0, 0.0]), np.array([[1.0, 0.0], [0.5, 1.0]]))
        with pytest.raises(ValueError):
            ball.project_weighted(np.array([2.0, 0.0]), np.diag([1.0, -0.5]))
        with pytest.raises(ValueError):
            ball.project_weighted(np.array([2.0, 0.0]), np.eye(3))


class TestValidation:
    def test_positive_radius(self):
        with pytest.raises(ValueError):
            Ball(np.zeros(2), 0.0)
        with pytest.raises(ValueError):
            OrthantBall(-1.0, 2)

    def test_finite_vectors(self, ball):
        with pytest.raises(ValueError):
            ball.project(np.array([np.inf, 0.0]))

    def test_interior_points_are_interior(self, ball, orthant):
        for region in (ball, orthant):
            p = region.interior_point()
            assert region.contains(p)
            assert np.linalg.norm(p - region.center) < region.radius
