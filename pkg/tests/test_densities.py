import math

import numpy as np
import pytest

from epiverify import (
    DimensionMismatchError,
    GaussianMixture,
    MixtureSpecError,
    RngStream,
    integrate_1d,
    linear_combine,
    product_mixture,
    sample_mixture,
    std_normal_pdf,
)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class TestConstruction:
    def test_weight_validation(self):
        with pytest.raises(MixtureSpecError, match="sum to 1"):
            GaussianMixture.from_components([(0.5, [0.0], [[1.0]]), (0.4, [1.0], [[1.0]])])
        with pytest.raises(MixtureSpecError, match="strictly positive"):
            GaussianMixture.from_components([(1.5, [0.0], [[1.0]]), (-0.5, [1.0], [[1.0]])])

    def test_covariance_validation(self):
        with pytest.raises(MixtureSpecError, match="symmetric"):
            GaussianMixture.gaussian([0.0, 0.0], [[1.0, 0.3], [0.2, 1.0]])
        with pytest.raises(MixtureSpecError, match="eigenvalues"):
            GaussianMixture.gaussian([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]])

    def test_dimension_cap(self):
        with pytest.raises(MixtureSpecError, match="dimension"):
            GaussianMixture.gaussian(np.zeros(4), np.eye(4))

    def test_json_round_trip(self, mix2d):
        rebuilt = GaussianMixture.from_dict(mix2d.to_dict())
        np.testing.assert_array_equal(rebuilt.weights, mix2d.weights)
        np.testing.assert_array_equal(rebuilt.means, mix2d.means)
        np.testing.assert_array_equal(rebuilt.covs, mix2d.covs)

    def test_from_dict_scalar_convenience(self):
        gm = GaussianMixture.from_dict(
            {"dim": 1, "components": [{"weight": 1.0, "mean": 2.0, "cov": 4.0}]}
        )
        assert gm.dim == 1
        assert gm.covs[0, 0, 0] == 4.0

    def test_from_dict_errors(self):
        with pytest.raises(MixtureSpecError, match="missing"):
            GaussianMixture.from_dict({"dim": 1})
        with pytest.raises(MixtureSpecError, match="declared dim"):
            GaussianMixture.from_dict(
                {"dim": 2, "components": [{"weight": 1.0, "mean": [0.0], "cov": [[1.0]]}]}
            )


class TestPdf:
    def test_standard_normal_at_zero(self, std1):
        assert std1.pdf(0.0) == pytest.approx(INV_SQRT_2PI, abs=1e-15)

    def test_symmetric_mixture_at_zero(self, narrow_pair):
        expected = float(std_normal_pdf(1.0))
        assert narrow_pair.pdf(0.0) == pytest.approx(expected, abs=1e-15)

    def test_2d_standard_at_origin(self):
        std2 = GaussianMixture.standard(2)
        assert std2.pdf([0.0, 0.0]) == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-15)

    def test_log_pdf_separated_components_stable(self):
        far = GaussianMixture.from_components([(0.5, [-40.0], [[1.0]]), (0.5, [40.0], [[1.0]])])
        value = far.log_pdf(40.0)
        assert np.isfinite(value)
        assert value == pytest.approx(math.log(0.5 * INV_SQRT_2PI), abs=1e-12)

    def test_dimension_mismatch(self, mix2d):
        with pytest.raises(DimensionMismatchError):
            mix2d.pdf([0.0])
        with pytest.raises(DimensionMismatchError):
            mix2d.pdf([0.0, 1.0, 2.0])


class TestMarginalConditional:
    def test_marginal_of_product_form(self, mix2d):
        marg = mix2d.marginal_prefix(1)
        assert marg.dim == 1
        np.testing.assert_array_equal(marg.means[:, 0], mix2d.means[:, 0])
        np.testing.assert_array_equal(marg.covs[:, 0, 0], mix2d.covs[:, 0, 0])

    def test_marginal_identity(self, mix2d):
        same = mix2d.marginal_prefix(2)
        np.testing.assert_array_equal(same.covs, mix2d.covs)

    def test_marginal_out_of_range(self, mix2d):
        with pytest.raises(IndexError):
            mix2d.marginal_prefix(3)

    def test_conditional_gaussian_formula(self, gauss2d_corr):
        cond = gauss2d_corr.conditional(2, [1.0])
        assert cond.means[0, 0] == pytest.approx(0.5, abs=1e-14)
        assert cond.covs[0, 0, 0] == pytest.approx(0.75, abs=1e-14)

    def test_conditional_symmetric_reweighting(self):
        d = GaussianMixture.from_components(
            [(0.5, [-1.0, 0.0], np.eye(2)), (0.5, [1.0, 0.0], np.eye(2))]
        )
        cond = d.conditional(2, [0.0])
        np.testing.assert_allclose(cond.weights, [0.5, 0.5], atol=1e-14)

    def test_conditional_product_form_independence(self):
        factors = [
            GaussianMixture.from_components([(0.3, [-1.0], [[0.5]]), (0.7, [2.0], [[1.5]])]),
            GaussianMixture.gaussian([0.5], [[2.0]]),
        ]
        d = product_mixture(factors)
        for prefix in ([-3.0], [0.0], [4.0]):
            cond = d.conditional(2, prefix)
            assert cond.means[0, 0] == pytest.approx(0.5, abs=1e-12)
            assert cond.covs[0, 0, 0] == pytest.approx(2.0, abs=1e-12)

    def test_chain_rule_consistency(self, mix2d, mix3d):
        rng = np.random.default_rng(2)
        for d in (mix2d, mix3d):
            points = rng.normal(scale=1.5, size=(1000, d.dim))
            k = d.dim
            marg = d.marginal_prefix(k - 1)
            joint = d.log_pdf(points)
            split = np.array(
                [
                    float(marg.log_pdf(p[: k - 1].reshape(1, -1))[0])
                    + d.conditional(k, p[: k - 1]).log_pdf(p[k - 1])
                    for p in points
                ]
            )
            np.testing.assert_allclose(split, joint, rtol=1e-10)


class TestCdfQuantile:
    def test_standard_median(self, std1):
        assert std1.cdf(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_symmetric_mixture_median(self, bimodal):
        assert bimodal.cdf(0.0) == pytest.approx(0.5, abs=1e-15)
        assert bimodal.quantile(0.5) == pytest.approx(0.0, abs=1e-10)

    def test_quantile_quarter_frozen_oracle(self, bimodal):
        # root of 0.5 Phi(x+2) + 0.5 Phi(x-2) = 1/4, solved independently at
        # 40-digit precision
        assert bimodal.quantile(0.25) == pytest.approx(-2.0000793614117924, abs=1e-9)

    def test_round_trip(self, bimodal):
        # x-space round trip wherever float64 keeps the CDF informative; the
        # upper limit is where the survival mass reaches the spacing of
        # float64 near 1, beyond which cdf(x) itself destroys x
        x = np.linspace(-10.0, 7.5, 401)
        np.testing.assert_allclose(bimodal.quantile(bimodal.cdf(x)), x, atol=1e-8)

    def test_round_trip_probability_space(self, bimodal):
        # in probability space the round trip holds over the full +/- 8 sd
        # range, relative to the tail mass
        x = np.linspace(-10.0, 10.0, 401)
        u = bimodal.cdf(x)
        u_back = bimodal.cdf(bimodal.quantile(u))
        np.testing.assert_array_less(
            np.abs(u_back - u), 1e-9 * np.minimum(u, 1 - u) + 1e-300
        )

    def test_domain_errors(self, bimodal):
        for bad in (0.0, 1.0):
            with pytest.raises(ValueError):
                bimodal.quantile(bad)

    def test_requires_1d(self, mix2d):
        with pytest.raises(DimensionMismatchError):
            mix2d.cdf(0.0)


class TestLinearCombine:
    def test_gaussian_stability(self, std1):
        s = math.sqrt(0.5)
        combo = linear_combine(s, std1, s, std1)
        assert combo.n_components == 1
        assert combo.covs[0, 0, 0] == pytest.approx(1.0, abs=1e-15)
        assert combo.means[0, 0] == 0.0

    def test_gaussian_convolution_adds_variance(self, bimodal, std1):
        t = 0.7
        combo = linear_combine(1.0, bimodal, math.sqrt(t), std1)
        np.testing.assert_allclose(combo.covs[:, 0, 0], bimodal.covs[:, 0, 0] + t, atol=1e-14)

    def test_component_combinatorics(self, bimodal, narrow_pair):
        combo = linear_combine(1.0, bimodal, 1.0, narrow_pair)
        assert combo.n_components == 4
        sums = sorted(combo.means[:, 0].tolist())
        assert sums == sorted([-3.0, -1.0, 1.0, 3.0])

    def test_covariance_identity(self, bimodal, narrow_pair):
        for lam in (0.17, 0.5, 0.83):
            combo = linear_combine(math.sqrt(lam), bimodal, math.sqrt(1 - lam), narrow_pair)
            expected = lam * bimodal.covariance + (1 - lam) * narrow_pair.covariance
            np.testing.assert_allclose(combo.covariance, expected, atol=1e-12)

    def test_dim_mismatch(self, std1, mix2d):
        with pytest.raises(DimensionMismatchError):
            linear_combine(1.0, std1, 1.0, mix2d)


class TestSmoothAndMoments:
    def test_smooth_adds_t(self, std1):
        assert std1.smooth(1.0).covs[0, 0, 0] == pytest.approx(2.0)

    def test_smooth_tight_mixture(self):
        tight = GaussianMixture.from_components(
            [(0.5, [-2.0], [[0.01]]), (0.5, [2.0], [[0.01]])]
        )
        sm = tight.smooth(1.0)
        np.testing.assert_allclose(sm.covs[:, 0, 0], [1.01, 1.01], atol=1e-15)

    def test_smooth_semigroup(self, mix2d):
        a = mix2d.smooth(0.3).smooth(0.7)
        b = mix2d.smooth(1.0)
        np.testing.assert_allclose(a.covs, b.covs, atol=1e-14)
        np.testing.assert_array_equal(a.means, b.means)

    def test_smooth_continuity_to_zero(self, bimodal):
        sm = bimodal.smooth(1e-12)
        np.testing.assert_allclose(sm.covs, bimodal.covs, atol=1e-11)

    def test_smooth_rejects_nonpositive(self, std1):
        for bad in (0.0, -1.0):
            with pytest.raises(ValueError):
                std1.smooth(bad)

    def test_moments_standard(self):
        std2 = GaussianMixture.standard(2)
        np.testing.assert_array_equal(std2.mean, np.zeros(2))
        np.testing.assert_array_equal(std2.covariance, np.eye(2))

    def test_moments_bimodal(self, bimodal):
        assert bimodal.mean[0] == pytest.approx(0.0, abs=1e-15)
        assert bimodal.covariance[0, 0] == pytest.approx(5.0, abs=1e-12)

    def test_moments_single_gaussian(self):
        cov = np.array([[2.0, 0.4], [0.4, 1.0]])
        g = GaussianMixture.gaussian([1.0, -2.0], cov)
        np.testing.assert_allclose(g.mean, [1.0, -2.0])
        np.testing.assert_allclose(g.covariance, cov, atol=1e-14)


class TestNormalizationAndSampling:
    def test_pdf_normalizes_1d(self, bimodal):
        sds = np.sqrt(bimodal.covs[:, 0, 0])
        lo = float(np.min(bimodal.means[:, 0] - 12 * sds))
        hi = float(np.max(bimodal.means[:, 0] + 12 * sds))
        mass = integrate_1d(lambda x: bimodal.pdf(np.atleast_1d(x)), lo, hi)
        assert mass == pytest.approx(1.0, abs=1e-8)

    def test_pdf_normalizes_nd_importance(self, mix2d, mix3d):
        # E_q[p/q] = 1 when q is a broad Gaussian proposal
        for d in (mix2d, mix3d):
            proposal = GaussianMixture.gaussian(d.mean, d.covariance * 2.0)
            pts = sample_mixture(proposal, RngStream(17, d.dim), 200_000)
            ratios = np.exp(d.log_pdf(pts) - proposal.log_pdf(pts))
            se = ratios.std(ddof=1) / math.sqrt(ratios.size)
            assert abs(ratios.mean() - 1.0) <= 3.0 * se

    def test_sample_moments(self, mix2d):
        n = 100_000
        pts = sample_mixture(mix2d, RngStream(5), n)
        bound = 4.0 * np.sqrt(np.diag(mix2d.covariance) / n)
        assert np.all(np.abs(pts.mean(axis=0) - mix2d.mean) < bound)
        np.testing.assert_allclose(np.cov(pts.T), mix2d.covariance, rtol=0.05, atol=0.01)

    def test_sample_determinism(self, bimodal):
        a = sample_mixture(bimodal, RngStream(9, 4), 1000)
        b = sample_mixture(bimodal, RngStream(9, 4), 1000)
        np.testing.assert_array_equal(a, b)
