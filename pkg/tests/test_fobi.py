import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import subdim.fobi as fobi_mod
from subdim.exceptions import InvalidK, UsageError
from subdim.fobi import (
    _fobi_order,
    fobi_asymp_pvalue,
    fobi_boot_pvalue,
    fobi_fit,
    fobi_resample_I,
    fobi_resample_II,
    fobi_sigma1,
    fobi_test,
    fobi_Tk,
    fobi_values,
)
from subdim.linalg import sym_power, weighted_chisq_mix_sf

seeds = st.integers(0, 2**32 - 1)


def ica_data(rng, n=500, p=6):
    Z = np.column_stack([
        rng.exponential(size=n) - 1,
        (rng.chisquare(2, n) - 2) / 2,
        (rng.random(n) - 0.5) * np.sqrt(12),
        rng.standard_normal((n, p - 3)),
    ])
    A = rng.standard_normal((p, p)) + 2 * np.eye(p)
    return Z @ A.T + rng.standard_normal(p)


class TestFit:
    def test_gaussian_eigenvalues(self):
        X = np.random.default_rng(0).standard_normal((100_000, 4))
        assert np.all(np.abs(fobi_fit(X).eigen.values - 6.0) < 0.1)

    def test_unmixing_properties(self):
        fit = fobi_fit(ica_data(np.random.default_rng(1)))
        np.testing.assert_allclose(fit.W @ fit.S1 @ fit.W.T, np.eye(6), atol=1e-8)
        D = fit.W @ fit.S2 @ fit.W.T
        assert np.abs(D - np.diag(np.diag(D))).max() < 1e-6
        np.testing.assert_allclose(np.diag(D), fit.eigen.values, atol=1e-8)

    def test_ordering(self):
        fit = fobi_fit(ica_data(np.random.default_rng(2)))
        assert np.all(np.diff(fit.deviations) <= 0)

    def test_tie_order(self):
        # 8 and 4 are equally far from p + 2 = 6; the larger comes first
        d = np.array([4.0, 8.0, 6.5])
        np.testing.assert_array_equal(d[_fobi_order(d, 4)], [8.0, 4.0, 6.5])

    @settings(max_examples=15, deadline=None)
    @given(seeds)
    def test_affine_invariance(self, seed):
        rng = np.random.default_rng(seed)
        X = ica_data(rng, n=200, p=5)
        A = rng.standard_normal((5, 5)) + 3 * np.eye(5)
        np.testing.assert_allclose(fobi_fit(X @ A.T + 1.0).eigen.values, fobi_fit(X).eigen.values, atol=1e-7)

    def test_cholesky_spectrum_matches(self):
        X = ica_data(np.random.default_rng(3), n=300)
        np.testing.assert_allclose(np.sort(fobi_values(X)), np.sort(fobi_fit(X).eigen.values), atol=1e-10)

    def test_needs_more_rows(self):
        with pytest.raises(UsageError):
            fobi_fit(np.random.default_rng(0).standard_normal((4, 4)))


class TestStatistic:
    def test_all_gaussian_values(self):
        for k in range(4):
            assert fobi_Tk(np.full(4, 6.0), k) == 0.0

    def test_two_values(self):
        assert fobi_Tk([10.0, 4.0], 1) == 0.0
        assert fobi_Tk([10.0, 4.0], 0) == 18.0

    def test_k_range(self):
        with pytest.raises(InvalidK):
            fobi_Tk([10.0, 4.0], 2)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.5, 20.0), min_size=2, max_size=7))
    def test_minimising_subset(self, d):
        p = len(d)
        for k in range(p):
            m = p - k
            brute = min(np.mean((np.array(c) - (p + 2)) ** 2) for c in itertools.combinations(d, m))
            assert fobi_Tk(d, k) == pytest.approx(brute, rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("k", [0, 2, 3, 5])
    def test_decomposition(self, k):
        fit = fobi_fit(ica_data(np.random.default_rng(4)))
        tail = fit.eigen.values[k:]
        s2 = np.var(tail)
        bias = (tail.mean() - 8.0) ** 2
        assert fobi_Tk(fit, k) == pytest.approx(s2 + bias, abs=1e-12)


class TestSigma1:
    def test_gaussian_target(self):
        X = np.random.default_rng(5).standard_normal((100_000, 6))
        fit = fobi_fit(X)
        for v in ("ica", "ngca"):
            assert abs(fobi_sigma1(X, fit, v) - 20.0) < 0.5

    def test_variants_agree_for_one_column(self):
        X = np.random.default_rng(6).exponential(size=(50, 1))
        fit = fobi_fit(X)
        assert fobi_sigma1(X, fit, "ica") == pytest.approx(fobi_sigma1(X, fit, "ngca"), rel=1e-12)

    def test_whitening_identity(self):
        X = ica_data(np.random.default_rng(7), n=100)
        Z = fobi_fit(X).sources(X)
        assert np.mean(np.sum(Z**2, axis=1)) == pytest.approx(6.0, rel=1e-12)

    def test_floor(self, monkeypatch):
        # the moment estimates are at least 8 with a 1/n covariance; raise the floor to exercise it
        X = ica_data(np.random.default_rng(8), n=100)
        monkeypatch.setattr(fobi_mod, "SIGMA_FLOOR", 1e6)
        with pytest.warns(RuntimeWarning):
            r = fobi_asymp_pvalue(X, 3)
        assert r.details["sigma1_hat"] == 1e6 and r.warnings

    def test_unknown_variant(self):
        X = ica_data(np.random.default_rng(8), n=100)
        with pytest.raises(UsageError):
            fobi_sigma1(X, fobi_fit(X), "jade")


class TestAsymptotic:
    def test_mixture_parameters(self):
        X = ica_data(np.random.default_rng(9))
        r = fobi_asymp_pvalue(X, 3)
        s1 = r.details["sigma1_hat"]
        assert r.df_or_mixture == {"a": 2 * s1, "df_a": 5, "b": 2 * s1 + 12, "df_b": 1}
        stat = 500 * 3 * r.statistic
        assert r.p_value == pytest.approx(weighted_chisq_mix_sf(stat, 2 * s1, 5, 2 * s1 + 12))

    def test_last_k_single_term(self):
        X = ica_data(np.random.default_rng(10))
        r = fobi_asymp_pvalue(X, 5)
        assert r.df_or_mixture["df_a"] == 0

    def test_power_and_null(self):
        X = ica_data(np.random.default_rng(11), n=2000)
        assert fobi_asymp_pvalue(X, 2).p_value < 1e-4
        assert fobi_asymp_pvalue(X, 3, "ngca").p_value > 1e-3

    def test_zero_statistic(self):
        assert weighted_chisq_mix_sf(0.0, 2.0, 5, 3.0) == 1.0


def _replay(seed, n, k, p):
    rng = np.random.default_rng(seed)
    cols = [rng.integers(0, n, n) for _ in range(k)]
    return cols, rng.standard_normal((n, p - k))


class TestResamplers:
    def test_strategy_one_structure(self):
        X = ica_data(np.random.default_rng(12), n=80)
        fit = fobi_fit(X)
        k = 3
        Xs = fobi_resample_I(X, k, fit, np.random.default_rng(4))
        Zs = fit.sources(Xs)
        Z = fit.sources(X)
        cols, G = _replay(4, 80, k, 6)
        for j in range(k):
            np.testing.assert_allclose(Zs[:, j], Z[cols[j], j], atol=1e-9)
            assert set(np.round(Zs[:, j], 8)) <= set(np.round(Z[:, j], 8))
        np.testing.assert_allclose(Zs[:, k:], G, atol=1e-9)

    def test_strategy_one_gaussian_only(self):
        X = ica_data(np.random.default_rng(13), n=50)
        fit = fobi_fit(X)
        Xs = fobi_resample_I(X, 0, fit, np.random.default_rng(1))
        _, G = _replay(1, 50, 0, 6)
        np.testing.assert_allclose(Xs, G @ np.linalg.inv(fit.W).T + fit.mean, atol=1e-9)

    @pytest.mark.parametrize("k", [0, 2, 3, 6])
    def test_strategy_two_structure(self, k):
        X = ica_data(np.random.default_rng(14), n=60)
        fit = fobi_fit(X)
        xbar = fit.mean
        Xs = fobi_resample_II(X, k, fit, np.random.default_rng(2))
        rng = np.random.default_rng(2)
        idx = rng.integers(0, 60, 60)
        O = rng.standard_normal((60, 6 - k))
        Uk = fit.eigen.vectors[:, k:]
        Sr, Sri = sym_power(fit.S1, 0.5), sym_power(fit.S1, -0.5)
        np.testing.assert_allclose((Xs - xbar) @ Sri @ Uk, O, atol=1e-9)
        Q = np.eye(6) - Sr @ Uk @ Uk.T @ Sri
        np.testing.assert_allclose((Xs - xbar) @ Q.T, (X[idx] - xbar) @ Q.T, atol=1e-9)
        if k == 0:
            np.testing.assert_allclose(Xs, O @ (Sr @ fit.eigen.vectors).T + xbar, atol=1e-9)
        if k == 6:
            np.testing.assert_allclose(Xs, X[idx], atol=1e-9)

    @pytest.mark.parametrize("fn", [fobi_resample_I, fobi_resample_II])
    def test_determinism(self, fn):
        X = ica_data(np.random.default_rng(15), n=40)
        fit = fobi_fit(X)
        np.testing.assert_array_equal(fn(X, 2, fit, np.random.default_rng(3)), fn(X, 2, fit, np.random.default_rng(3)))


class TestBootstrap:
    @pytest.mark.parametrize("strategy", [1, 2])
    def test_lattice_and_determinism(self, strategy):
        X = ica_data(np.random.default_rng(16), n=300)
        a = fobi_boot_pvalue(X, 3, strategy, M=39, seed=7)
        b = fobi_boot_pvalue(X, 3, strategy, M=39, seed=7)
        assert a.p_value == b.p_value
        assert abs(a.p_value * 40 - round(a.p_value * 40)) < 1e-9

    def test_power(self):
        X = ica_data(np.random.default_rng(17), n=2000)
        assert fobi_boot_pvalue(X, 2, 1, M=49, seed=1).p_value == pytest.approx(1 / 50)

    def test_dispatch(self):
        X = ica_data(np.random.default_rng(18), n=200)
        assert fobi_test(X, 3, "boot2", M=9, seed=2).mode == "boot_II"
        assert fobi_test(X, 3, variant="ngca").details["variant"] == "ngca"
        with pytest.raises(UsageError):
            fobi_test(X, 3, "boot3")
