import math

import numpy as np
import pytest

from expanderflow import fields as fd
from expanderflow import oracle
from expanderflow.errors import BlowUp, NoBracket


class TestSeries:
    def test_series_coefficient_against_symbolic_expansion(self):
        # re-derive the cubic launch coefficient by pushing the series
        # through the profile equation with sympy
        sympy = pytest.importorskip("sympy")
        rho, a, b = sympy.symbols("rho a b")
        for n in (2, 3):
            psi = a * rho + b * rho**3
            expr = (
                sympy.diff(psi, rho, 2)
                + ((n - 1) / rho + rho / 2) * sympy.diff(psi, rho)
                - (n - 1) / (2 * rho**2) * sympy.sin(2 * psi)
            )
            series = sympy.series(expr, rho, 0, 2).removeO().expand()
            coeff = sympy.Poly(series, rho).coeff_monomial(rho)
            sol = sympy.solve(sympy.Eq(coeff, 0), b)[0]
            got = oracle.series_coefficient(n, 0.37)
            assert got == pytest.approx(float(sol.subs(a, 0.37)), rel=1e-12)

    def test_far_tail_coefficients_against_symbolic_expansion(self):
        sympy = pytest.importorskip("sympy")
        rho, c2, c4, psi_inf = sympy.symbols("rho c2 c4 psi_inf")
        n = 3
        psi = psi_inf + c2 / rho**2 + c4 / rho**4
        expr = (
            sympy.diff(psi, rho, 2)
            + ((n - 1) / rho + rho / 2) * sympy.diff(psi, rho)
            - (n - 1) / (2 * rho**2) * sympy.sin(2 * psi)
        )
        # expand at infinity: match rho^{-2} and rho^{-4}
        u = sympy.symbols("u", positive=True)
        series = sympy.series(expr.subs(rho, 1 / u), u, 0, 5).removeO()
        series = sympy.expand(sympy.simplify(series * u**2 / u**2))
        poly = sympy.Poly(sympy.expand(series + sympy.O(u**6).removeO() if False else series), u)
        eq2 = poly.coeff_monomial(u**2)
        eq4 = poly.coeff_monomial(u**4)
        sol = sympy.solve([eq2, eq4], [c2, c4], dict=True)[0]
        val = 0.21
        k = n - 1
        c2_code = -k * math.sin(2 * val) / 2.0
        c4_code = c2_code * (6.0 - 2.0 * k - k * math.cos(2 * val)) / 2.0
        assert float(sol[c2].subs(psi_inf, val)) == pytest.approx(c2_code, rel=1e-10)
        assert float(sol[c4].subs(psi_inf, val)) == pytest.approx(c4_code, rel=1e-10)


class TestIntegrateProfile:
    def test_zero_slope_is_zero(self):
        rho, psi, dpsi = oracle.integrate_profile(2, 0.0, 30.0)
        assert np.all(psi == 0.0) and np.all(dpsi == 0.0)

    def test_small_slope_matches_linearized_equation(self):
        a = 1e-3
        rho, psi, _ = oracle.integrate_profile(2, a, 30.0)
        rho_l, psi_l, _ = oracle.integrate_profile(2, a, 30.0, linearized=True)
        mask = rho <= 1.0
        assert np.max(np.abs(psi - psi_l)[mask]) < a**3

    def test_tail_is_algebraic_order_two(self):
        profile = oracle.shoot(2, 0.05)
        assert profile.tail_fit == pytest.approx(2.0, abs=0.1)

    def test_blow_up_raised_for_large_slope(self):
        with pytest.raises(BlowUp):
            oracle.integrate_profile(2, 1e5, 30.0)

    def test_moderate_large_slopes_saturate_below_pi(self):
        # shots from the origin approach the antipodal angle from below
        rho, psi, _ = oracle.integrate_profile(2, 100.0, 30.0)
        assert 2.5 < psi.max() < np.pi

    def test_rho_max_floor(self):
        with pytest.raises(ValueError):
            oracle.integrate_profile(2, 0.1, 10.0)


class TestShoot:
    def test_alpha_zero(self):
        profile = oracle.shoot(2, 0.0)
        assert profile.slope == 0.0
        assert np.all(profile.psi == 0.0)
        assert profile.converged

    @pytest.mark.parametrize("n", [2, 3])
    def test_boundary_angle_hit(self, n):
        profile = oracle.shoot(n, 0.05)
        assert profile.converged
        assert abs(profile.psi_inf - 0.05) <= 1e-10

    def test_slope_stable_under_domain_extension(self):
        p1 = oracle.shoot(2, 0.05, rho_max=30.0)
        p2 = oracle.shoot(2, 0.05, rho_max=60.0)
        assert abs(p1.slope - p2.slope) < 1e-8

    def test_slope_monotone_in_alpha(self):
        slopes = [oracle.shoot(2, a).slope for a in (0.01, 0.02, 0.04, 0.06, 0.08, 0.1)]
        assert all(b > a for a, b in zip(slopes, slopes[1:]))

    def test_no_overshoot_small_data(self):
        profile = oracle.shoot(2, 0.05)
        assert profile.psi.min() >= -1e-15
        assert profile.psi.max() <= 0.05 * 1.05

    def test_negative_alpha_mirrors(self):
        p = oracle.shoot(2, -0.05)
        q = oracle.shoot(2, 0.05)
        assert p.slope == pytest.approx(-q.slope, rel=1e-12)

    def test_out_of_band_target_raises(self):
        with pytest.raises(NoBracket):
            oracle.shoot(2, 3.5)

    def test_serialization(self, tmp_path):
        profile = oracle.shoot(2, 0.05)
        csv = tmp_path / "profile.csv"
        js = tmp_path / "profile.json"
        profile.save(str(csv), str(js))
        lines = open(csv, newline="").read().split("\r\n")
        assert lines[0] == "rho,psi,dpsi"
        row = [float(x) for x in lines[1].split(",")]
        assert row[0] == pytest.approx(profile.rho_grid[0])
        import json

        header = json.loads(open(js).read())
        assert header["schema_version"] == 1
        assert header["converged"] is True


class TestLiftProfile:
    def test_zero_profile_is_north_pole(self, small_grid2):
        profile = oracle.shoot(2, 0.0)
        fld = oracle.lift_profile(profile, small_grid2)
        pole = np.zeros(3)
        pole[-1] = 1.0
        assert np.max(np.abs(fld.values - pole)) == 0.0

    def test_values_exactly_unit_norm(self, small_grid2):
        profile = oracle.shoot(2, 0.05)
        fld = oracle.lift_profile(profile, small_grid2)
        assert np.max(np.abs(np.linalg.norm(fld.values, axis=-1) - 1.0)) < 1e-14

    def test_rotation_equivariance_on_symmetric_nodes(self, small_grid2):
        profile = oracle.shoot(2, 0.05)
        fld = oracle.lift_profile(profile, small_grid2)
        m = small_grid2.points_per_axis
        c = (m - 1) // 2
        # quarter-turn: value at (j, i) is the rotation of the value at (i, j)
        v1 = fld.values[c + 10, c + 4]
        v2 = fld.values[c - 4, c + 10]
        rotated = np.array([-v1[1], v1[0], v1[2]])
        assert np.allclose(v2, rotated, atol=1e-15)

    def test_profile_equation_residual_second_order(self):
        profile = oracle.shoot(2, 0.05)
        errs = []
        for m in (129, 257):
            grid = fd.GridSpec(dim=2, half_width=8.0, points_per_axis=m)
            fld = oracle.lift_profile(profile, grid)
            errs.append(oracle.profile_lattice_residual(profile, fld))
        order = math.log2(errs[0] / errs[1])
        assert order > 1.5
