import numpy as np
import pytest

from bdreg.data import Sample, build_grid, grid_from_values
from bdreg.dgp import DgpSpec, generate
from bdreg.exceptions import EstimationError, TailError
from bdreg.marginals import (
    fit_marginal,
    fit_probit_dr,
    fit_tail_scale,
    marginal_index,
    probit_loglik,
    probit_score,
)
from bdreg.normal import std_normal_cdf, std_normal_quantile

from conftest import bench_spec


def two_covariate_probit(n, seed, coef=(0.3, -0.6, 0.9)):
    rng = np.random.default_rng(seed)
    x = np.column_stack([np.ones(n), rng.normal(size=n), rng.random(n)])
    p = std_normal_cdf(x @ np.asarray(coef))
    below = (rng.random(n) < p).astype(float)
    return x, below


class TestProbitFit:
    def test_intercept_only_half(self):
        x = np.ones((40, 1))
        below = np.r_[np.ones(20), np.zeros(20)]
        res = fit_probit_dr(x, below)
        assert abs(res.coef[0]) <= 1e-12

    def test_intercept_only_quantile(self):
        x = np.ones((400, 1))
        below = np.r_[np.ones(100), np.zeros(300)]
        res = fit_probit_dr(x, below)
        assert abs(res.coef[0] - std_normal_quantile(0.25)) <= 1e-8

    def test_two_covariate_dgp_recovery(self):
        # MC oracle: with n = 10000 the estimates sit well within 3 standard
        # errors of the truth (frozen from a 50-replication run; see
        # tests/oracles/compute_mc_oracles.py).
        coef = np.array([0.3, -0.6, 0.9])
        x, below = two_covariate_probit(10000, 42)
        res = fit_probit_dr(x, below)
        from _mc_oracles import ORACLES
        se = np.asarray(ORACLES["probit_two_covariate_se"])
        assert np.all(np.abs(res.coef - coef) <= 3.0 * se)

    def test_one_sided_threshold_errors(self):
        x = np.ones((30, 1))
        with pytest.raises(EstimationError, match="one-sided"):
            fit_probit_dr(x, np.ones(30))

    def test_weight_neutrality(self):
        x, below = two_covariate_probit(800, 3)
        base = fit_probit_dr(x, below)
        ones = fit_probit_dr(x, below, weights=np.ones(800))
        assert np.max(np.abs(base.coef - ones.coef)) <= 1e-10

    def test_weight_scale_invariance(self):
        x, below = two_covariate_probit(800, 4)
        a = fit_probit_dr(x, below, weights=np.full(800, 1.0 / 800))
        b = fit_probit_dr(x, below, weights=np.full(800, 1.0))
        assert np.max(np.abs(a.coef - b.coef)) <= 1e-10

    def test_score_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        x, below = two_covariate_probit(500, 5)
        h = 1e-6
        for _ in range(20):
            coef = rng.normal(scale=0.7, size=3)
            g = probit_score(x, below, coef)
            fd = np.array([
                (probit_loglik(x, below, coef + h * e) - probit_loglik(x, below, coef - h * e)) / (2 * h)
                for e in np.eye(3)
            ])
            denom = np.maximum(np.abs(fd), 1e-8)
            assert np.max(np.abs(g - fd) / denom) <= 1e-6


class TestTailScale:
    def test_unit_gaussian_alpha_near_one(self):
        from _mc_oracles import ORACLES
        rng = np.random.default_rng(21)
        y = rng.standard_normal(10000)
        x = np.ones((10000, 1))
        anchor = float(np.quantile(y, 0.98, method="inverted_cdf"))
        coef = fit_probit_dr(x, (y <= anchor).astype(float)).coef
        tail = fit_tail_scale(y, x, coef, anchor, "upper", min_obs=30)
        assert abs(tail.alpha - 1.0) <= 3.0 * ORACLES["tail_alpha_unit_se"]

    def test_scale_two_gaussian_alpha_near_half(self):
        from _mc_oracles import ORACLES
        rng = np.random.default_rng(22)
        y = 2.0 * rng.standard_normal(10000)
        x = np.ones((10000, 1))
        anchor = float(np.quantile(y, 0.98, method="inverted_cdf"))
        coef = fit_probit_dr(x, (y <= anchor).astype(float)).coef
        tail = fit_tail_scale(y, x, coef, anchor, "upper", min_obs=30)
        assert abs(tail.alpha - 0.5) <= 3.0 * ORACLES["tail_alpha_scale2_se"]

    def test_too_few_tail_observations(self):
        rng = np.random.default_rng(23)
        y = rng.standard_normal(200)
        anchor = float(np.quantile(y, 0.98, method="inverted_cdf"))
        x = np.ones((200, 1))
        coef = fit_probit_dr(x, (y <= anchor).astype(float)).coef
        with pytest.raises(TailError, match="admissible"):
            fit_tail_scale(y, x, coef, anchor, "upper", min_obs=30)

    def test_lower_tail(self):
        rng = np.random.default_rng(24)
        y = rng.standard_normal(10000)
        x = np.ones((10000, 1))
        anchor = float(np.quantile(y, 0.02, method="inverted_cdf"))
        coef = fit_probit_dr(x, (y <= anchor).astype(float)).coef
        tail = fit_tail_scale(y, x, coef, anchor, "lower", min_obs=30)
        assert tail.alpha > 0 and tail.r0 < anchor

    def test_admissibility_counts(self):
        # exactly min_obs - 1 observations beyond the anchor: no candidate
        y = np.r_[np.linspace(0, 1, 100), np.linspace(2, 3, 29)]
        x = np.ones((y.size, 1))
        with pytest.raises(TailError):
            fit_tail_scale(y, x, np.array([1.0]), 1.0, "upper", min_obs=30)


class TestMarginalFit:
    def test_shape_contract(self, small_sample):
        grid = build_grid(small_sample, n_points=5)
        fit = fit_marginal(small_sample.y, small_sample.x, grid, "y")
        assert fit.coef.shape == (grid.y_body.size, small_sample.d_x)
        assert np.all(np.isfinite(fit.coef))
        assert fit.alpha_lo > 0 and fit.alpha_hi > 0

    def test_intercept_only_matches_empirical_cdf(self):
        rng = np.random.default_rng(31)
        y = rng.standard_normal(3000)
        s = Sample(y=y, w=y, x=np.ones((3000, 1)))
        grid = build_grid(s, n_points=8)
        fit = fit_marginal(s.y, s.x, grid, "y")
        for i, r in enumerate(fit.body):
            frac = np.mean(y <= r)
            assert abs(std_normal_cdf(fit.coef[i, 0]) - frac) <= 1e-10

    def test_weight_neutrality(self, small_sample):
        grid = build_grid(small_sample, n_points=5)
        a = fit_marginal(small_sample.y, small_sample.x, grid, "y")
        b = fit_marginal(
            small_sample.y, small_sample.x, grid, "y",
            weights=np.ones(small_sample.n),
        )
        assert np.max(np.abs(a.coef - b.coef)) <= 1e-10
        assert abs(a.alpha_lo - b.alpha_lo) <= 1e-10
        assert abs(a.alpha_hi - b.alpha_hi) <= 1e-10

    def test_empirical_cdf_within_sampling_error(self):
        spec = bench_spec(4000, 33)
        s = generate(spec)
        grid = build_grid(s, n_points=8)
        fit = fit_marginal(s.y, s.x, grid, "y")
        for i, r in enumerate(fit.body):
            model = float(np.mean(std_normal_cdf(s.x @ fit.coef[i])))
            emp = float(np.mean(s.y <= r))
            assert abs(model - emp) <= 3.0 * np.sqrt(emp * (1 - emp) / s.n) + 5e-3


class TestMarginalIndex:
    @pytest.fixture(scope="class")
    def fitted(self):
        rng = np.random.default_rng(41)
        n = 4000
        x = np.column_stack([np.ones(n), rng.random(n)])
        y = x @ np.array([0.1, 0.4]) + rng.standard_normal(n)
        s = Sample(y=y, w=y, x=x)
        grid = build_grid(s, n_points=8)
        return fit_marginal(y, x, grid, "y"), x

    def test_anchor_exact(self, fitted):
        fit, x = fitted
        r = fit.anchor_hi
        np.testing.assert_allclose(
            marginal_index(fit, r, x[:5]), x[:5] @ fit.coef[-1], rtol=0, atol=0
        )

    def test_affine_extrapolation(self, fitted):
        fit, x = fitted
        h = 0.37
        got = marginal_index(fit, fit.anchor_hi + h, x[:5])
        want = x[:5] @ fit.coef[-1] + h * fit.alpha_hi
        np.testing.assert_allclose(got, want, atol=1e-14)

    def test_continuity_at_both_anchors(self, fitted):
        fit, x = fitted
        rng = np.random.default_rng(0)
        rows = x[rng.integers(0, x.shape[0], size=100)]
        for anchor in (fit.anchor_lo, fit.anchor_hi):
            at = marginal_index(fit, anchor, rows)
            above = marginal_index(fit, anchor + 1e-13, rows)
            below = marginal_index(fit, anchor - 1e-13, rows)
            assert np.max(np.abs(at - above)) <= 1e-12
            assert np.max(np.abs(at - below)) <= 1e-12

    def test_infinite_sentinels(self, fitted):
        fit, x = fitted
        assert np.all(np.isneginf(marginal_index(fit, -np.inf, x[:3])))
        assert np.all(np.isposinf(marginal_index(fit, np.inf, x[:3])))

    def test_warm_cold_equivalence(self):
        spec = bench_spec(2000, 55)
        s = generate(spec)
        grid = build_grid(s, n_points=6)
        warm = fit_marginal(s.y, s.x, grid, "y")
        cold = fit_marginal(
            s.y, s.x, grid, "y",
            warm_starts=[None] * grid.y_body.size,
        )
        assert np.max(np.abs(warm.coef - cold.coef)) <= 1e-8
