"""Exit criteria: Monte Carlo calibration cells, fixture reproduction and the property suite.

Every criterion prints one PASS/FAIL line. The simulation cells use N = 500
repetitions, M = 200 bootstrap replicates and the seed below, fixed before
any run.
"""

import math
import time

import numpy as np
import pytest

from subdim.bootstrap import BootstrapConfig, bootstrap_pvalue
from subdim.fobi import fobi_fit, fobi_resample_I, fobi_resample_II, fobi_Tk
from subdim.linalg import haar_orthogonal, weighted_chisq_mix_sf
from subdim.pca import pca_fit, pca_Lk, pca_projections, pca_resample_I, pca_resample_II, pca_Tk, pca_Vk
from subdim.scatter import spatial_median, tyler_shape
from subdim.simulate import SimulationSpec, rejection_rate
from subdim.sir import sir_asymp_pvalue, sir_fit, sir_resample, sir_Tk

pytestmark = pytest.mark.acceptance

SEED = 20240501
REPS = 500
M = 200


def verdict(log, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}"
    print(line)
    log.append(line)
    return ok


def cell(**kw):
    t0 = time.perf_counter()
    rep = rejection_rate(SimulationSpec(reps=REPS, M=M, seed=SEED, **kw))
    return rep, time.perf_counter() - t0


def within(x, lo, hi):
    return lo <= x <= hi


class TestCalibration:
    def test_1_pca_asymptotic_null(self, verdicts):
        rep, secs = cell(model="pca_m1", p=6, n=1000, methods=("asymp",))
        r = rep.rate("asymp", 3)
        ok = within(r, 0.025, 0.075) and secs < 120
        assert verdict(verdicts, 1, ok, f"PCA M1 cov asymptotic, true H03: rate {r:.4f} "
                       f"in [0.025, 0.075] (reference 0.0510); {secs:.0f} s < 120 s")

    def test_2_pca_bootstrap_null(self, verdicts):
        rep, secs = cell(model="pca_m1", p=6, n=1000, methods=("boot2",))
        r = rep.rate("boot2", 3)
        ok = within(r, 0.025, 0.075) and secs < 1800
        assert verdict(verdicts, 2, ok, f"PCA M1 cov PCA-II bootstrap M=200, true H03: rate {r:.4f} "
                       f"in [0.025, 0.075] (reference 0.0495); {secs:.0f} s < 1800 s")

    def test_3_pca_power(self, verdicts):
        rep, _ = cell(model="pca_m1", p=6, n=500, methods=("asymp",), k=(2,))
        r = rep.rate("asymp", 2)
        assert verdict(verdicts, 3, r >= 0.95, f"PCA M1 n=500 cov asymptotic, false H02: rate {r:.4f} "
                       f">= 0.95 (reference 1.0000)")

    def test_4_robustness_contrast(self, verdicts):
        tyl, _ = cell(model="pca_m3", p=15, n=1000, methods=("asymp",), scatter="tyler3")
        cov, _ = cell(model="pca_m3", p=15, n=1000, methods=("asymp",), scatter="cov")
        rt, rc = tyl.rate("asymp", 3), cov.rate("asymp", 3)
        ok = within(rt, 0.02, 0.08) and rc > 0.10
        assert verdict(verdicts, 4, ok, f"PCA M3 t5 p=15, true H03: Tyler rate {rt:.4f} in [0.02, 0.08] "
                       f"(reference 0.0470), cov rate {rc:.4f} > 0.10 (reference 0.1630)")

    def test_5_fobi_calibration(self, verdicts):
        rep, _ = cell(model="ica_m1", p=6, n=1000, methods=("asy1", "boot1"))
        ra, rb = rep.rate("asy1", 3), rep.rate("boot1", 3)
        ok = within(ra, 0.02, 0.07) and within(rb, 0.03, 0.10)
        assert verdict(verdicts, 5, ok, f"ICA M1 p=6, true H03: Asy1 {ra:.4f} in [0.02, 0.07] "
                       f"(reference 0.044), Boot1 {rb:.4f} in [0.03, 0.10] (reference 0.062)")

    def test_6_sir_calibration(self, verdicts):
        rep, _ = cell(model="sir_m1", p=6, n=1000, methods=("asymp", "boot"), H=10)
        ra, rb = rep.rate("asymp", 2), rep.rate("boot", 2)
        ok = within(ra, 0.025, 0.075) and within(rb, 0.03, 0.09)
        assert verdict(verdicts, 6, ok, f"SIR M1 p=6 H=10, true H02: asymptotic {ra:.4f} in "
                       f"[0.025, 0.075] (reference 0.050), bootstrap {rb:.4f} in [0.03, 0.09] "
                       f"(reference 0.057)")


AIS_PREDICTORS = ["ht", "wt", "rcc", "wcc", "hc", "hg", "ferr", "ssf"]


class TestFixtures:
    def test_7_ais(self, verdicts):
        rdatasets = pytest.importorskip("rdatasets")
        try:
            df = rdatasets.data("DAAG", "ais")
        except Exception as exc:  # data not shipped with this rdatasets build
            verdicts.append(f"SKIP  criterion 7 (AIS): data unavailable ({exc})")
            pytest.skip("AIS data unavailable")
        X = np.log(df[AIS_PREDICTORS].to_numpy(float))
        y = df["lbm"].to_numpy(float)
        fit = sir_fit(X, y, 10)
        eig = np.round(fit.eigen.values, 2)
        want_eig = np.array([0.95, 0.21, 0.11, 0.07, 0.04, 0.02, 0.01, 0.00])
        pv = np.array([sir_asymp_pvalue(X, y, k, fit=fit).p_value for k in range(4)])
        want_pv = np.array([0.000, 0.001, 0.121, 0.458])
        ok = np.array_equal(eig, want_eig) and np.all(np.abs(pv - want_pv) <= 0.01)
        assert verdict(verdicts, "7 (AIS)", ok, f"SIR eigenvalues {eig.tolist()}, asymptotic p-values "
                       f"{np.round(pv, 3).tolist()} vs {want_pv.tolist()} within 0.01")

    def test_7_laseri(self, verdicts):
        verdicts.append("SKIP  criterion 7 (LASERI): fixture not available in this environment")
        pytest.skip("LASERI data are not obtainable here; conditional item")

    def test_7_image(self, verdicts):
        verdicts.append("SKIP  criterion 7 (image mixing): source images not available in this environment")
        pytest.skip("image fixture not obtainable here; conditional item")


def tyler_map(X, mu, V):
    n, p = X.shape
    Vi = np.linalg.inv(V)
    acc = np.zeros((p, p))
    for x in X - mu:
        acc += np.outer(x, x) / (x @ Vi @ x)
    return acc * p / np.trace(acc)


def ica_sample(rng, n=400, p=5):
    Z = np.column_stack([rng.exponential(size=n) - 1, (rng.random(n) - 0.5) * math.sqrt(12),
                         rng.standard_normal((n, p - 2))])
    return Z @ (rng.standard_normal((p, p)) + 3 * np.eye(p)).T


def sir_sample(rng, n=400, p=5):
    Z = rng.standard_normal((n, p))
    return Z, Z[:, 0] * (Z[:, 0] + Z[:, 1] + 1) + 0.5 * rng.standard_normal(n)


class TestProperties:
    def test_8_property_suite(self, verdicts):
        rng = np.random.default_rng(SEED)
        checks = {}

        # invariance batteries: statistic values at relative 1e-7
        inv = True
        for _ in range(20):
            X = rng.standard_normal((300, 5)) * np.r_[3, 2, 1, 1, 1]
            O = haar_orthogonal(5, rng)
            b = rng.standard_normal(5)
            for sc in ("cov", "tyler"):
                a0, a1 = pca_fit(X, sc), pca_fit(X @ O.T + b, sc)
                for k in range(4):
                    t0, t1 = pca_Tk(a0, k), pca_Tk(a1, k)
                    inv &= abs(t0 - t1) <= 1e-7 * max(abs(t0), 1e-300)
            A = rng.standard_normal((5, 5)) + 3 * np.eye(5)
            Xi = ica_sample(rng)
            f0, f1 = fobi_fit(Xi), fobi_fit(Xi @ A.T + b)
            Xs, y = sir_sample(rng)
            s0, s1 = sir_fit(Xs, y), sir_fit(Xs @ A.T + b, y)
            for k in range(5):
                inv &= abs(fobi_Tk(f0, k) - fobi_Tk(f1, k)) <= 1e-7 * max(fobi_Tk(f0, k), 1e-12)
                inv &= abs(sir_Tk(s0, k) - sir_Tk(s1, k)) <= 1e-7 * max(sir_Tk(s0, k), 1e-12)
        checks["affine/orthogonal invariance"] = bool(inv)

        # Pillai identity: n p m1 equals n times the trace of (between + within)^-1 between
        Xs, y = sir_sample(rng)
        fit = sir_fit(Xs, y, 8)
        Xc = Xs - Xs.mean(axis=0)
        lab = fit.slices.labels
        means = np.array([Xc[lab == h].mean(axis=0) for h in np.unique(lab)])
        counts = np.array([np.sum(lab == h) for h in np.unique(lab)])
        B = (means.T * counts) @ means
        pillai = np.trace(np.linalg.solve(Xc.T @ Xc, B))
        n = len(y)
        checks["Pillai identity"] = abs(n * 5 * fit.eigen.values.mean() - n * pillai) <= 1e-8 * n * pillai

        # projection identities
        proj = True
        for sc in ("cov", "tyler"):
            pf = pca_fit(rng.standard_normal((200, 5)) * np.r_[3, 2, 1, 1, 1], sc)
            for k in range(6):
                P, Q = pca_projections(pf, k)
                proj &= np.abs(P @ pf.scatter.matrix @ Q).max() <= 1e-8
        checks["P S Q = 0"] = bool(proj)

        # spectrum functionals on random spectra
        last, amgm, vt, nested = True, True, True, True
        for _ in range(500):
            p = int(rng.integers(2, 10))
            d = np.sort(rng.gamma(1.0, 2.0, p) + 1e-3)[::-1]
            last &= pca_Tk(d, p - 1) == 0.0
            for k in range(p - 1):
                amgm &= pca_Lk(d, k) >= 0.0
                vt &= pca_Vk(d, k) <= pca_Tk(d, k) * (1 + 1e-12)
            for q in range(p):
                for k in range(q, p):
                    nested &= pca_Tk(d, k) <= ((p - q) / (p - k)) ** 2 * pca_Tk(d, q) * (1 + 1e-12) + 1e-300
        checks["T_(p-1) = 0"] = bool(last)
        checks["L_k >= 0"] = bool(amgm)
        checks["V_k <= T_k"] = bool(vt)
        checks["nested tail bound"] = bool(nested)

        # bootstrap p-values on the lattice {1, ..., M+1}/(M+1)
        lat = True
        for m in (1, 19, 99):
            out = bootstrap_pvalue(0.3, lambda g: g.standard_normal(), BootstrapConfig(M=m, seed=int(rng.integers(1 << 31))))
            j = out.p_value * (m + 1)
            lat &= abs(j - round(j)) < 1e-9 and 1 <= round(j) <= m + 1
        checks["p-value lattice"] = bool(lat)

        # chi-square mixture tail against 10^7 Monte Carlo draws
        g = np.random.default_rng(SEED + 1)
        N = 10_000_000
        draws = 2.5 * g.chisquare(4, N) + 6.0 * g.chisquare(1, N)
        p_mc = np.mean(draws >= 25.0)
        se = math.sqrt(p_mc * (1 - p_mc) / N)
        checks["mixture tail vs Monte Carlo"] = abs(weighted_chisq_mix_sf(25.0, 2.5, 4, 6.0) - p_mc) < 3 * se

        # Tyler fixed point
        Xt = rng.standard_t(3, (300, 4)) * np.r_[3.0, 1, 1, 0.5]
        mu = spatial_median(Xt)
        V = tyler_shape(Xt, mu).matrix
        checks["Tyler fixed-point residual"] = np.linalg.norm(tyler_map(Xt, mu, V) - V) <= 1e-6

        # resampler determinism
        det = True
        Xp = rng.standard_normal((80, 5))
        pf = pca_fit(Xp)
        for fn in (pca_resample_I, pca_resample_II):
            det &= np.array_equal(fn(Xp, 2, pf, np.random.default_rng(7)), fn(Xp, 2, pf, np.random.default_rng(7)))
        Xi = ica_sample(rng, n=80)
        ff = fobi_fit(Xi)
        for fn in (fobi_resample_I, fobi_resample_II):
            det &= np.array_equal(fn(Xi, 2, ff, np.random.default_rng(7)), fn(Xi, 2, ff, np.random.default_rng(7)))
        Xs, y = sir_sample(rng, n=80)
        sf = sir_fit(Xs, y)
        a, b = sir_resample(Xs, y, 2, sf, np.random.default_rng(7)), sir_resample(Xs, y, 2, sf, np.random.default_rng(7))
        det &= np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        checks["resampler determinism"] = bool(det)

        failed = [name for name, ok in checks.items() if not ok]
        detail = f"{len(checks) - len(failed)}/{len(checks)} properties hold"
        if failed:
            detail += f"; failed: {', '.join(failed)}"
        assert verdict(verdicts, 8, not failed, detail)
