import math

import numpy as np
import pytest

from epiverify import (
    BracketError,
    QuadratureBudgetError,
    QuadratureConfig,
    RootConfig,
    find_root_monotone,
    integrate_1d,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from epiverify.numerics import solve_monotone_vec

HALF_LOG_2PIE = 0.5 * math.log(2.0 * math.pi * math.e)


class TestIntegrate:
    def test_polynomial(self):
        assert integrate_1d(lambda x: x**2, 0.0, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-10)

    def test_normal_normalization(self):
        assert integrate_1d(std_normal_pdf, -8.0, 8.0) == pytest.approx(1.0, abs=1e-10)

    def test_normal_entropy_integrand(self):
        value = integrate_1d(
            lambda x: -std_normal_pdf(x) * (-0.5 * x * x - 0.5 * math.log(2 * math.pi)),
            -9.0,
            9.0,
        )
        assert value == pytest.approx(HALF_LOG_2PIE, abs=1e-10)

    @pytest.mark.parametrize("degree", range(11))
    def test_polynomials_to_degree_10(self, degree):
        coeffs = np.arange(1, degree + 2, dtype=float)
        exact = sum(
            c / (k + 1) * (1.0 - (-1.0) ** (k + 1)) for k, c in enumerate(coeffs)
        )
        value = integrate_1d(lambda x: np.polynomial.polynomial.polyval(x, coeffs), -1.0, 1.0)
        assert value == pytest.approx(exact, abs=1e-10)

    def test_infinite_range_matches_truncation(self):
        # tangent substitution and +/- 9 sigma truncation must agree
        full = integrate_1d(std_normal_pdf, -np.inf, np.inf)
        truncated = integrate_1d(std_normal_pdf, -9.0, 9.0)
        assert full == pytest.approx(truncated, abs=1e-9)
        assert full == pytest.approx(1.0, abs=1e-9)

    def test_semi_infinite(self):
        value = integrate_1d(lambda x: np.exp(-x), 0.0, np.inf)
        assert value == pytest.approx(1.0, abs=1e-9)

    def test_empty_and_invalid_ranges(self):
        assert integrate_1d(std_normal_pdf, 2.0, 2.0) == 0.0
        with pytest.raises(ValueError):
            integrate_1d(std_normal_pdf, 1.0, -1.0)

    def test_budget_error_carries_estimate(self):
        cfg = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=3)
        with pytest.raises(QuadratureBudgetError) as info:
            integrate_1d(lambda x: np.abs(x - 0.1234567) ** 0.5, -1.0, 1.0, cfg)
        exact = (2.0 / 3.0) * (1.1234567**1.5 + 0.8765433**1.5)
        assert info.value.estimate == pytest.approx(exact, abs=0.01)
        assert info.value.residual > 0.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            QuadratureConfig(abs_tol=0.0)
        with pytest.raises(ValueError):
            QuadratureConfig(max_subdivisions=0)


class TestFindRoot:
    def test_cube_root(self):
        assert find_root_monotone(lambda x: x**3 - 8.0, 0.0, 4.0) == pytest.approx(2.0, abs=1e-10)

    def test_normal_median(self):
        assert find_root_monotone(lambda x: std_normal_cdf(x) - 0.5, -5.0, 5.0) == pytest.approx(
            0.0, abs=1e-10
        )

    def test_normal_975_quantile(self):
        # oracle: the CDF evaluated by quadrature of the density
        def quad_cdf(x):
            return integrate_1d(std_normal_pdf, -9.0, x) - 0.975

        root = find_root_monotone(quad_cdf, -8.0, 8.0)
        assert root == pytest.approx(1.9599639845400545, abs=1e-8)

    def test_invalid_bracket(self):
        with pytest.raises(BracketError):
            find_root_monotone(lambda x: x + 10.0, 0.0, 1.0)

    def test_newton_polish(self):
        root = find_root_monotone(
            lambda x: x**3 - 8.0, 0.0, 4.0, RootConfig(x_tol=1e-6), dg=lambda x: 3 * x * x
        )
        assert root == pytest.approx(2.0, abs=1e-9)

    def test_randomized_monotone_functions(self):
        # cubes and CDF-shaped curves with random roots and scales
        rng = np.random.default_rng(1)
        cfg = RootConfig()
        for trial in range(1000):
            root = rng.uniform(-5.0, 5.0)
            scale = rng.uniform(0.2, 5.0)
            if trial % 2 == 0:
                g = lambda x: scale * (x - root) ** 3 + (x - root)
            else:
                g = lambda x: std_normal_cdf(scale * (x - root)) - 0.5
            found = find_root_monotone(g, root - 7.0, root + 11.0, cfg)
            assert abs(g(found)) <= 10 * cfg.f_tol or abs(found - root) <= 1e-9


class TestVectorSolver:
    def test_matches_scalar(self):
        targets = np.linspace(-0.9, 0.9, 41)
        lo = np.full_like(targets, -10.0)
        hi = np.full_like(targets, 10.0)

        def f_df(x):
            return np.tanh(x) - targets, 1.0 / np.cosh(x) ** 2

        roots = solve_monotone_vec(f_df, lo, hi)
        np.testing.assert_allclose(np.tanh(roots), targets, atol=1e-11)

    def test_plateau_robustness(self):
        # a nearly flat region between two steep rises defeated plain Newton
        targets = np.full(64, 0.32)
        lo = np.full(64, -14.0)
        hi = np.full(64, 14.0)

        def f_df(x):
            f = 0.5 * std_normal_cdf(x + 2) + 0.5 * std_normal_cdf(x - 2) - targets
            df = 0.5 * std_normal_pdf(x + 2) + 0.5 * std_normal_pdf(x - 2)
            return f, df

        roots = solve_monotone_vec(f_df, lo, hi)
        assert np.max(np.abs(f_df(roots)[0])) <= 1e-10


class TestNormalSpecialFunctions:
    def test_cdf_center(self):
        assert std_normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_quantile_center(self):
        assert std_normal_quantile(0.5) == pytest.approx(0.0, abs=1e-15)

    def test_cdf_against_quadrature_oracle(self):
        value = integrate_1d(std_normal_pdf, -9.0, 1.959964)
        assert abs(float(std_normal_cdf(1.959964)) - value) < 1e-12
        assert value == pytest.approx(0.975, abs=1e-9)

    def test_mutual_inverse(self):
        x = np.linspace(-6.0, 6.0, 1201)
        np.testing.assert_allclose(std_normal_quantile(std_normal_cdf(x)), x, atol=1e-9)
        u = np.linspace(1e-10, 1.0 - 1e-10, 999)
        np.testing.assert_allclose(std_normal_cdf(std_normal_quantile(u)), u, atol=1e-12)

    def test_quantile_domain(self):
        for bad in (0.0, 1.0, -0.2, 1.7):
            with pytest.raises(ValueError):
                std_normal_quantile(bad)
