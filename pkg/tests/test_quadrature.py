import numpy as np
import pytest

from scalinglab.errors import NonFiniteIntegral, ToleranceUnreachable
from scalinglab.quadrature import (angular_rule, ball_scheme, gauss_legendre, product_scheme, quad_build,
                                   self_test, sphere_area)


@pytest.mark.parametrize("s,area", [(2, 2 * np.pi), (3, 4 * np.pi)])
def test_sphere_area(s, area):
    assert sphere_area(s) == pytest.approx(area, rel=1e-14)


def test_gauss_legendre_integrates_polynomials():
    x, w = gauss_legendre(-1.0, 2.0, 5)
    # exact up to degree 9
    assert w @ x ** 9 == pytest.approx((2.0 ** 10 - 1.0) / 10, rel=1e-13)


@pytest.mark.parametrize("s", [2, 3])
def test_angular_rule_total_measure(s):
    dirs, w = angular_rule(s, 8)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert w.sum() == pytest.approx(sphere_area(s), rel=1e-13)
    assert np.all(w > 0)


class TestQuadBuild:
    def test_gaussian_3d(self):
        q = quad_build(3, 1e-6)
        assert q.integrate(np.exp(-q.radii ** 2)) == pytest.approx(np.pi ** 1.5, rel=1e-6)

    def test_gaussian_2d(self):
        q = quad_build(2, 1e-6)
        assert q.integrate(np.exp(-q.radii ** 2)) == pytest.approx(np.pi, rel=1e-6)

    def test_exponential_3d(self):
        q = quad_build(3, 1e-6)
        assert q.integrate(np.exp(-2 * q.radii)) == pytest.approx(np.pi, rel=1e-6)

    @pytest.mark.parametrize("s", [2, 3])
    def test_self_test_passes(self, s):
        q = quad_build(s, 1e-8)
        assert max(self_test(q).values()) <= 1e-8
        assert np.all(q.weights > 0)

    @pytest.mark.parametrize("tol", [0.0, -1.0, 0.5])
    def test_bad_tolerance(self, tol):
        with pytest.raises(ValueError):
            quad_build(3, tol)

    def test_unsupported_dimension(self):
        with pytest.raises(ValueError):
            quad_build(4, 1e-6)

    def test_unreachable(self):
        with pytest.raises(ToleranceUnreachable):
            quad_build(3, 1e-15, max_level=0)


def test_refinement_is_consistent(q3, mixed3):
    from scalinglab.testfn import mass_norm_sq
    a = mass_norm_sq(mixed3, 0.0, q3)
    b = mass_norm_sq(mixed3, 0.0, q3.refined())
    assert abs(a - b) <= 1e-8 * a


def test_scaled_scheme_matches_substitution(q3):
    # int g(p) dp over the stretched scheme equals the integral of g on the original one
    lam = 0.37
    qs = q3.scaled(1.0 / lam)
    v1 = qs.integrate(np.exp(-(lam * qs.radii) ** 2))
    v0 = q3.integrate(np.exp(-q3.radii ** 2))
    assert v1 == pytest.approx(v0 / lam ** 3, rel=1e-13)


def test_non_finite_raises(q3):
    vals = np.ones(len(q3.weights))
    vals[3] = np.nan
    with pytest.raises(NonFiniteIntegral):
        q3.integrate(vals)


def test_ball_scheme_volume():
    q = ball_scheme(3, 2.0)
    assert q.integrate(np.ones(len(q.weights))) == pytest.approx(4 / 3 * np.pi * 8, rel=1e-12)


def test_product_scheme_positive_weights():
    q = product_scheme(3, n_radial=6, n_polar=6)
    assert np.all(q.weights > 0)
