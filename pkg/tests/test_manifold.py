import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expanderflow import manifold as mf
from expanderflow.errors import NotOnManifold, OutsideTube


@pytest.fixture(scope="module")
def sphere3():
    return mf.unit_sphere(3)


class TestProjection:
    def test_outside_tube_raises(self, sphere3):
        with pytest.raises(OutsideTube):
            mf.project(sphere3, np.array([2.0, 0.0, 0.0]))

    def test_point_on_sphere_fixed(self, sphere3):
        p = np.array([0.6, 0.8, 0.0])
        assert np.allclose(mf.project(sphere3, p), p, atol=1e-15)

    def test_radial_projection(self, sphere3):
        out = mf.project(sphere3, np.array([0.9, 0.0, 0.0]))
        assert np.allclose(out, [1.0, 0.0, 0.0], atol=1e-15)

    def test_idempotent_and_unit(self, sphere3):
        rng = np.random.default_rng(7)
        y = rng.normal(size=(2000, 3))
        y = y / np.linalg.norm(y, axis=-1, keepdims=True) * rng.uniform(0.6, 1.4, (2000, 1))
        p = mf.project(sphere3, y)
        assert np.max(np.abs(np.linalg.norm(p, axis=-1) - 1.0)) < 1e-14
        assert np.max(np.abs(mf.project(sphere3, p) - p)) < 1e-12


class TestSecondFundamentalForm:
    def test_sign_convention_from_projection_hessian(self, sphere3):
        # Differentiating y/|y| twice along a tangent gives -<X,X> y; the
        # form used by the solver flips that sign so the flow keeps |u|=1.
        sympy = pytest.importorskip("sympy")
        y1, y2, y3, t = sympy.symbols("y1 y2 y3 t")
        base = sympy.Matrix([0, 0, 1])
        tangent = sympy.Matrix([1, 0, 0])
        curve = base + t * tangent
        proj = curve / sympy.sqrt(curve.dot(curve))
        hess = sympy.diff(proj, t, 2).subs(t, 0)
        assert list(hess) == [0, 0, -1]
        ours = mf.second_fundamental_form(
            sphere3, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0])
        )
        assert np.allclose(ours, -np.array(hess, dtype=float).ravel(), atol=1e-15)

    def test_orthogonal_tangents_vanish(self, sphere3):
        out = mf.second_fundamental_form(
            sphere3, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
        )
        assert np.allclose(out, 0.0, atol=1e-15)

    def test_bilinear_scaling(self, sphere3):
        out = mf.second_fundamental_form(
            sphere3, np.array([1.0, 0.0, 0.0]), np.array([0.0, 2.0, 0.0]), np.array([0.0, 2.0, 0.0])
        )
        assert np.allclose(out, [4.0, 0.0, 0.0], atol=1e-14)

    def test_off_manifold_rejected(self, sphere3):
        with pytest.raises(NotOnManifold):
            mf.second_fundamental_form(
                sphere3, np.array([0.5, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([0.0, 1.0, 0.0])
            )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_output_normal_to_tangent_plane(self, seed):
        sphere = mf.unit_sphere(3)
        rng = np.random.default_rng(seed)
        y = rng.normal(size=3)
        y /= np.linalg.norm(y)
        xv, yv = rng.normal(size=3), rng.normal(size=3)
        out = mf.second_fundamental_form(sphere, y, xv, yv)
        t = rng.normal(size=3)
        t -= np.dot(t, y) * y
        norm = np.linalg.norm(t)
        if norm > 1e-9:
            assert abs(np.dot(out, t / norm)) <= 1e-10


class TestExtendedForm:
    def test_inside_inner_cutoff_matches_form(self, sphere3):
        out = mf.extended_form(
            sphere3, np.array([0.9, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([0.0, 1.0, 0.0])
        )
        assert np.allclose(out, [1.0, 0.0, 0.0], atol=1e-14)

    def test_vanishes_at_origin(self, sphere3):
        out = mf.extended_form(sphere3, np.zeros(3), np.array([0.0, 1.0, 0.0]), np.array([0.0, 1.0, 0.0]))
        assert np.allclose(out, 0.0)

    def test_vanishes_beyond_outer_cutoff(self, sphere3):
        y = np.array([1.0 + sphere3.cutoff_outer, 0.0, 0.0])
        out = mf.extended_form(sphere3, y, np.array([0.0, 1.0, 0.0]), np.array([0.0, 1.0, 0.0]))
        assert np.allclose(out, 0.0)

    def test_globally_bounded(self, sphere3):
        rng = np.random.default_rng(11)
        y = rng.normal(scale=2.0, size=(100_000, 3))
        xv = rng.normal(size=(100_000, 3))
        xv /= np.linalg.norm(xv, axis=-1, keepdims=True)
        yv = rng.normal(size=(100_000, 3))
        yv /= np.linalg.norm(yv, axis=-1, keepdims=True)
        out = mf.extended_form(sphere3, y, xv, yv)
        assert np.max(np.linalg.norm(out, axis=-1)) <= sphere3.a_bound + 1e-12

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_bilinearity(self, seed):
        sphere = mf.unit_sphere(3)
        rng = np.random.default_rng(seed)
        y = rng.normal(size=3) * 1.1
        x1, x2, yv = rng.normal(size=(3, 3))
        a, b = rng.normal(size=2)
        lhs = mf.extended_form(sphere, y, a * x1 + b * x2, yv)
        rhs = a * mf.extended_form(sphere, y, x1, yv) + b * mf.extended_form(sphere, y, x2, yv)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))

    def test_quadratic_source_matches_columnwise_form(self, sphere3):
        rng = np.random.default_rng(3)
        u = rng.normal(size=(40, 3))
        grad = rng.normal(size=(40, 2, 3))
        out = mf.quadratic_source(sphere3, u, grad)
        manual = np.zeros_like(out)
        for i in range(40):
            for ax in range(2):
                manual[i] += mf.extended_form(sphere3, u[i], grad[i, ax], grad[i, ax])
        assert np.allclose(out, manual, atol=1e-13)
