"""Tests for the number of non-Gaussian components based on FOBI.

FOBI jointly diagonalises the covariance ``S1`` and the fourth-moment scatter
``S2``. Gaussian directions give the eigenvalue ``p + 2`` of
``R = S1^{-1/2} S2 S1^{-1/2}``, so ``H0k`` (exactly ``k`` non-Gaussian
directions) is tested with the mean squared deviation from ``p + 2`` of the
``p - k`` eigenvalues closest to it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_data, check_k
from .bootstrap import BootstrapConfig, bootstrap_pvalue
from .exceptions import UsageError
from .linalg import EigenSystem, sym_eigen, sym_power, weighted_chisq_mix_sf
from .results import TestResult
from .scatter import fourth_moment_scatter, mean_cov

VARIANTS = ("ica", "ngca")
SIGMA_FLOOR = 1e-6


@dataclass
class FobiFit:
    """FOBI decomposition of a sample.

    ``eigen`` holds the eigenvalues of ``R`` ordered by decreasing squared
    distance from ``p + 2`` (larger eigenvalue first on ties) and ``W`` is
    the unmixing matrix ``U' S1^{-1/2}``.
    """

    mean: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    R: np.ndarray
    eigen: EigenSystem
    W: np.ndarray
    n: int
    p: int

    @property
    def deviations(self) -> np.ndarray:
        return (self.eigen.values - (self.p + 2.0)) ** 2

    def sources(self, X) -> np.ndarray:
        """Estimated components ``W (x - xbar)`` as rows."""
        return (check_data(X) - self.mean) @ self.W.T


def _fobi_order(d, p):
    dev = (d - (p + 2.0)) ** 2
    return np.lexsort((-d, -dev))


def fobi_fit(X, eigen_method: str = "lapack") -> FobiFit:
    """Covariance, fourth-moment scatter and their joint diagonaliser."""
    X = check_data(X)
    n, p = X.shape
    if n <= p:
        raise UsageError(f"FOBI needs n > p, got n={n}, p={p}")
    S1 = mean_cov(X)
    S2 = fourth_moment_scatter(X, S1)
    root_inv = sym_power(S1.matrix, -0.5)
    R = root_inv @ S2 @ root_inv
    R = 0.5 * (R + R.T)
    es = sym_eigen(R, method=eigen_method)
    order = _fobi_order(es.values, p)
    eigen = EigenSystem(es.values[order], es.vectors[:, order])
    return FobiFit(S1.location, S1.matrix, S2, R, eigen, eigen.vectors.T @ root_inv, n, p)


def fobi_Tk(fit, k: int, p: int | None = None) -> float:
    """Mean of the ``p - k`` smallest squared deviations ``(d_i - (p+2))^2``.

    ``fit`` is a :class:`FobiFit` or a plain spectrum, in which case the
    dimension defaults to its length.
    """
    if isinstance(fit, FobiFit):
        dev = fit.deviations
    else:
        d = np.asarray(fit, dtype=float)
        dev = np.sort((d - ((d.size if p is None else p) + 2.0)) ** 2)[::-1]
    k = check_k(k, 0, dev.size - 1)
    return float(np.mean(np.sort(dev)[: dev.size - k]))


def fobi_sigma1(X, fit: FobiFit, variant: str = "ica", notes: list | None = None) -> float:
    """Plug-in estimate of ``sigma1``.

    ``"ica"``: ``mean_i sum_j z_ij^4 - p + 8`` (independent components).
    ``"ngca"``: ``mean_i |z_i|^4 - p^2 + 8`` (Gaussian noise independent of
    the signal block). Non-positive estimates, possible in tiny samples, are
    clipped to a small floor with a warning.
    """
    Z = fit.sources(X)
    p = fit.p
    if variant == "ica":
        s = float(np.mean(np.sum(Z**4, axis=1))) - p + 8.0
    elif variant == "ngca":
        r2 = np.einsum("ij,ij->i", Z, Z)
        s = float(np.mean(r2 * r2)) - p * p + 8.0
    else:
        raise UsageError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if s < SIGMA_FLOOR:
        msg = f"sigma1 estimate {s:.3g} clipped to {SIGMA_FLOOR}"
        warnings.warn(msg, RuntimeWarning)
        if notes is not None:
            notes.append(msg)
        s = SIGMA_FLOOR
    return s


def fobi_asymp_pvalue(X, k: int, variant: str = "ica", fit: FobiFit | None = None) -> TestResult:
    """Asymptotic test of ``H0k`` against the chi-square mixture.

    ``n (p-k) T_k`` is referred to ``2 s1 chi2_{df} + (2 s1 + 4 (p-k)) chi2_1``
    with ``df = (p-k-1)(p-k+2)/2``; for ``k = p - 1`` only the second term
    remains. Eighth moments are assumed finite.
    """
    X = check_data(X)
    fit = fobi_fit(X) if fit is None else fit
    n, p = fit.n, fit.p
    k = check_k(k, 0, p - 1)
    notes = []
    s1 = fobi_sigma1(X, fit, variant, notes)
    T = fobi_Tk(fit, k)
    stat = n * (p - k) * T
    df_a = (p - k - 1) * (p - k + 2) // 2
    a = 2.0 * s1
    b = 2.0 * s1 + 4.0 * (p - k)
    pval = weighted_chisq_mix_sf(stat, a, df_a, b)
    mix = {"a": a, "df_a": df_a, "b": b, "df_b": 1}
    return TestResult("fobi", k, T, pval, "asymptotic", mix, n, p, warnings=notes,
                      details={"variant": variant, "sigma1_hat": s1, "sigma2": 4.0,
                               "scaled_statistic": stat,
                               "eigenvalues": fit.eigen.values.tolist()})


def fobi_sampler(X, k: int, fit: FobiFit, strategy: int = 1) -> Callable[[np.random.Generator], np.ndarray]:
    """Precompute a FOBI-I or FOBI-II null sampler; returns ``rng -> X*``.

    Strategy 1 (IC model): each of the first ``k`` estimated components is
    resampled on its own and the others are replaced by standard normals.
    Strategy 2 (NGCA model): resampled rows keep their projection on the
    signal space and get a fresh Gaussian noise part.
    """
    X = check_data(X)
    n, p = X.shape
    k = check_k(k, 0, p)
    xbar = fit.mean
    S1_root = sym_power(fit.S1, 0.5)
    if strategy == 1:
        Z = fit.sources(X)
        back = fit.eigen.vectors.T @ S1_root  # (W')^{-1} = U' S1^{1/2}

        def draw(rng):
            Zs = np.empty((n, p))
            for j in range(k):
                Zs[:, j] = Z[rng.integers(0, n, n), j]
            Zs[:, k:] = rng.standard_normal((n, p - k))
            return Zs @ back + xbar

    elif strategy == 2:
        Xc = X - xbar
        Uk = fit.eigen.vectors[:, k:]
        S1_rinv = sym_power(fit.S1, -0.5)
        Qt = np.eye(p) - S1_rinv @ Uk @ Uk.T @ S1_root
        noise_back = Uk.T @ S1_root

        def draw(rng):
            idx = rng.integers(0, n, n)
            return Xc[idx] @ Qt + rng.standard_normal((n, p - k)) @ noise_back + xbar

    else:
        raise UsageError("FOBI bootstrap strategy must be 1 or 2")
    return draw


def fobi_resample_I(X, k: int, fit: FobiFit, rng) -> np.ndarray:
    return fobi_sampler(X, k, fit, 1)(rng)


def fobi_resample_II(X, k: int, fit: FobiFit, rng) -> np.ndarray:
    return fobi_sampler(X, k, fit, 2)(rng)


def fobi_values(X) -> np.ndarray:
    """Eigenvalues of ``R`` via Cholesky whitening, for bootstrap replicates.

    Any whitening gives ``R`` up to an orthogonal similarity, so the spectrum
    matches :func:`fobi_fit` without a symmetric square root.
    """
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    L = np.linalg.cholesky(Xc.T @ Xc / n)
    Y = np.linalg.solve(L, Xc.T).T
    r2 = np.einsum("ij,ij->i", Y, Y)
    return np.linalg.eigvalsh((Y * r2[:, None]).T @ Y / n)


def fobi_boot_pvalue(X, k: int, strategy: int = 1, M: int = 500, seed=None, n_jobs: int = 1,
                     strict_sequential: bool = False, fit: FobiFit | None = None) -> TestResult:
    """Bootstrap test of ``H0k`` with strategy FOBI-I (1) or FOBI-II (2)."""
    X = check_data(X)
    fit = fobi_fit(X) if fit is None else fit
    n, p = fit.n, fit.p
    k = check_k(k, 0, p - 1)
    T = fobi_Tk(fit, k)
    config = BootstrapConfig(M=M, seed=seed, n_jobs=n_jobs, strict_sequential=strict_sequential)
    draw = fobi_sampler(X, k, fit, strategy)
    m = p - k

    def score(rng):
        dev = np.sort((fobi_values(draw(rng)) - (p + 2.0)) ** 2)
        return float(np.mean(dev[:m]))

    out = bootstrap_pvalue(T, score, config)
    return TestResult("fobi", k, T, out.p_value, "boot_I" if strategy == 1 else "boot_II", {},
                      n, p, M=config.M, seed=out.seed,
                      details={"mc_variance": out.variance, "retries": out.retries,
                               "eigenvalues": fit.eigen.values.tolist()})


def fobi_test(X, k: int, method: str = "asymp", variant: str = "ica", M: int = 500, seed=None,
              **kwargs) -> TestResult:
    """Dispatch on ``method`` in ``{"asymp", "boot1", "boot2"}``."""
    if method == "asymp":
        return fobi_asymp_pvalue(X, k, variant, fit=kwargs.get("fit"))
    if method in ("boot1", "boot2"):
        return fobi_boot_pvalue(X, k, int(method[-1]), M, seed, **kwargs)
    raise UsageError(f"unknown FOBI method {method!r}")
