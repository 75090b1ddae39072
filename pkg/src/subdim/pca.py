"""Subsphericity tests for principal component analysis.

``H0k`` states that the ``p - k`` smallest eigenvalues of the scatter matrix
are equal, i.e. the noise part of the data is subspherical. Statistics are
eigenvalue functionals of the ``p - k`` smallest eigenvalues; p-values come
from the chi-square limit or from bootstrap samples drawn from a data-based
distribution on which ``H0k`` holds exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_data, check_k
from .bootstrap import BootstrapConfig, bootstrap_pvalue
from .exceptions import InvalidSpectrum, SingularMatrix, UsageError
from .linalg import EigenSystem, chisq_sf, eigen_moments, haar_orthogonal, sym_eigen
from .results import TestResult
from .scatter import ScatterEstimate, hr_estimate, hr_kstep, mean_cov, sigma1_hat

SCATTERS = ("cov", "tyler", "tyler3")
STATISTICS = ("T", "L")


@dataclass
class PcaFit:
    """Scatter estimate of a sample with its eigen-decomposition.

    ``scatter_kind`` is the requested flag; ``"tyler"`` and ``"tyler3"``
    both fit the full Tyler shape on the sample itself and differ only in the
    estimate used inside bootstrap replicates.
    """

    scatter: ScatterEstimate
    eigen: EigenSystem
    n: int
    p: int
    scatter_kind: str = "cov"

    @property
    def values(self) -> np.ndarray:
        return self.eigen.values


def _scatter_of(X, kind: str) -> ScatterEstimate:
    if kind == "cov":
        return mean_cov(X)
    if kind in ("tyler", "tyler3"):
        return hr_estimate(X)
    raise UsageError(f"unknown scatter {kind!r}; choose from {SCATTERS}")


def pca_fit(X, scatter: str = "cov", eigen_method: str = "lapack") -> PcaFit:
    """Fit the scatter matrix and its eigen-decomposition.

    Parameters
    ----------
    X : array-like of shape (n, p)
    scatter : {"cov", "tyler", "tyler3"}
        Covariance with the sample mean, or Tyler's shape matrix with the
        spatial median.
    eigen_method : {"lapack", "jacobi"}
    """
    X = check_data(X)
    S = _scatter_of(X, scatter)
    return PcaFit(S, sym_eigen(S.matrix, method=eigen_method), X.shape[0], X.shape[1], scatter)


def _values(fit_or_values) -> np.ndarray:
    if isinstance(fit_or_values, PcaFit):
        return fit_or_values.values
    return np.sort(np.asarray(fit_or_values, dtype=float))[::-1]


def pca_Tk(fit, k: int) -> float:
    """Variance of the ``p - k`` smallest eigenvalues.

    ``fit`` is a :class:`PcaFit` or a plain spectrum.
    """
    d = _values(fit)
    k = check_k(k, 0, d.size - 1)
    return eigen_moments(d[k:]).s2


def pca_Vk(fit, k: int) -> float:
    """Smallest variance over all sets of ``p - k`` eigenvalues.

    The minimising set of a fixed size is a contiguous run of the sorted
    spectrum, so only the ``k + 1`` windows are scanned.
    """
    d = _values(fit)
    k = check_k(k, 0, d.size - 1)
    m = d.size - k
    return float(min(eigen_moments(d[i:i + m]).s2 for i in range(k + 1)))


def pca_Lk(fit, k: int) -> float:
    """Log of the arithmetic over the geometric mean of the ``p - k`` smallest eigenvalues."""
    d = _values(fit)
    k = check_k(k, 0, d.size - 1)
    tail = d[k:]
    if np.any(tail <= 0):
        raise InvalidSpectrum("the smallest eigenvalues must be positive for L_k")
    return max(float(np.log(tail.mean()) - np.mean(np.log(tail))), 0.0)


def pca_projections(fit: PcaFit, k: int):
    """Noise and signal projections ``(P_k, Q_k)``.

    ``P_k`` projects on the eigenvectors of the ``p - k`` smallest
    eigenvalues and ``Q_k = I - P_k`` on the first ``k``.
    """
    k = check_k(k, 0, fit.p)
    U = fit.eigen.vectors[:, k:]
    P = U @ U.T
    return P, np.eye(fit.p) - P


def _df(p: int, k: int) -> int:
    return (p - k - 1) * (p - k + 2) // 2


def pca_asymp_pvalue(X, k: int, scatter: str = "cov", statistic: str = "T",
                     fit: PcaFit | None = None) -> TestResult:
    """Asymptotic chi-square test of ``H0k``.

    The T statistic is scaled as ``n (p-k) T_k / (2 d^2 sigma1)`` with ``d``
    the mean of the ``p - k`` smallest eigenvalues; the L statistic as
    ``n (p-k) L_k / sigma1``. Both are referred to chi-square with
    ``(p-k-1)(p-k+2)/2`` degrees of freedom. For ``k = p - 1`` there is
    nothing to test and the p-value is 1.

    For Tyler's shape the limit is derived for elliptical data only, so the
    test is heuristic outside that model.
    """
    if statistic not in STATISTICS:
        raise UsageError(f"unknown statistic {statistic!r}; choose from {STATISTICS}")
    X = check_data(X)
    fit = pca_fit(X, scatter) if fit is None else fit
    n, p = fit.n, fit.p
    k = check_k(k, 0, p - 1)
    d = fit.values
    T = pca_Tk(fit, k) if statistic == "T" else pca_Lk(fit, k)
    d_hat = float(d[k:].mean())
    s1 = sigma1_hat(X, fit.scatter)
    df = _df(p, k)
    notes = []
    if df == 0:
        notes.append("k = p - 1: a single eigenvalue is trivially spherical, p-value set to 1")
        warnings.warn(notes[-1], RuntimeWarning)
        scaled, pval = 0.0, 1.0
    else:
        if d_hat <= 0:
            raise InvalidSpectrum("mean of the smallest eigenvalues is not positive")
        if statistic == "T":
            scaled = n * (p - k) * T / (2.0 * d_hat**2 * s1)
        else:
            scaled = n * (p - k) * T / s1
        pval = chisq_sf(scaled, df)
    if fit.scatter.is_tyler:
        notes.append("Tyler-based asymptotic law assumes an elliptical model")
    return TestResult("pca", k, float(T), float(pval), "asymptotic", {"df": df}, n, p,
                      scatter=fit.scatter_kind, warnings=notes,
                      details={"statistic_name": statistic, "d_hat": d_hat, "sigma1_hat": s1,
                               "scaled_statistic": float(scaled),
                               "eigenvalues": d.tolist()})


def _unit_directions(rng, n, m):
    g = rng.standard_normal((n, m))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _rotate_rows(V, rng, rotation):
    """Apply an independent Haar rotation to every row of ``V``.

    ``"sphere"`` uses that ``O v`` with Haar ``O`` is ``|v|`` times a uniform
    unit vector, which has the same law and costs O(m) per row instead of a
    QR factorisation.
    """
    n, m = V.shape
    if m == 0:
        return V
    if rotation == "haar":
        O = haar_orthogonal(m, rng, size=n)
        return np.einsum("ijk,ik->ij", O, V)
    if rotation == "sphere":
        return np.linalg.norm(V, axis=1, keepdims=True) * _unit_directions(rng, n, m)
    raise UsageError(f"unknown rotation {rotation!r}")


def pca_sampler(X, k: int, fit: PcaFit, strategy: int = 2,
                rotation: str = "sphere") -> Callable[[np.random.Generator], np.ndarray]:
    """Precompute a PCA-I or PCA-II null sampler; returns ``rng -> X*``.

    Strategy 1 (elliptical subspherical null): rows of the standardised
    principal components are resampled, rotated by independent Haar
    matrices and rescaled with the ``p - k`` smallest eigenvalues replaced
    by their mean. Strategy 2 (subspherical null): resampled rows keep their
    signal part and have their noise part rotated within the noise space.
    """
    X = check_data(X)
    n, p = X.shape
    k = check_k(k, 0, p)
    mu = fit.scatter.location
    U = fit.eigen.vectors
    Xc = X - mu
    if strategy == 1:
        d = fit.values
        if d[-1] <= 1e-12 * max(d[0], 1e-300):
            raise SingularMatrix("scatter matrix is singular; cannot standardise")
        Z = (Xc @ U) / np.sqrt(d)
        dk = d.copy()
        if k < p:
            dk[k:] = d[k:].mean()
        back = np.sqrt(dk)[:, None] * U.T

        def draw(rng):
            idx = rng.integers(0, n, n)
            return _rotate_rows(Z[idx], rng, rotation) @ back + mu

    elif strategy == 2:
        Uk = U[:, k:]

        def draw(rng):
            idx = rng.integers(0, n, n)
            D = Xc[idx]
            R = D @ Uk
            return D + (_rotate_rows(R, rng, rotation) - R) @ Uk.T + mu

    else:
        raise UsageError("PCA bootstrap strategy must be 1 or 2")
    return draw


def pca_resample_I(X, k: int, fit: PcaFit, rng, rotation: str = "sphere") -> np.ndarray:
    """One bootstrap sample from the elliptical subspherical null (PCA-I)."""
    return pca_sampler(X, k, fit, 1, rotation)(rng)


def pca_resample_II(X, k: int, fit: PcaFit, rng, rotation: str = "sphere") -> np.ndarray:
    """One bootstrap sample from the subspherical null (PCA-II)."""
    return pca_sampler(X, k, fit, 2, rotation)(rng)


def _replicate_values(Xs, fit: PcaFit, tyler_steps: int) -> np.ndarray:
    if fit.scatter_kind == "cov":
        Xc = Xs - Xs.mean(axis=0)
        return np.linalg.eigvalsh(Xc.T @ Xc / Xs.shape[0])[::-1]
    if fit.scatter_kind == "tyler3":
        S = hr_kstep(Xs, fit.scatter, steps=tyler_steps)
    else:
        S = hr_estimate(Xs)
    return np.linalg.eigvalsh(S.matrix)[::-1]


def _stat_from_values(d, k, statistic):
    tail = d[k:]
    if statistic == "T":
        return float(np.var(tail))
    if np.any(tail <= 0):
        raise InvalidSpectrum("non-positive eigenvalue in a bootstrap replicate")
    return float(np.log(tail.mean()) - np.mean(np.log(tail)))


def pca_boot_pvalue(X, k: int, scatter: str = "cov", strategy: int = 2, M: int = 500,
                    seed=None, statistic: str = "T", tyler_steps: int = 3,
                    n_jobs: int = 1, strict_sequential: bool = False,
                    rotation: str = "sphere", fit: PcaFit | None = None) -> TestResult:
    """Bootstrap test of ``H0k`` with strategy PCA-I (1) or PCA-II (2).

    Replicates refit the same scatter; with ``scatter="tyler3"`` they use
    ``tyler_steps`` fixed-point updates started from the original estimate.
    """
    if statistic not in STATISTICS:
        raise UsageError(f"unknown statistic {statistic!r}; choose from {STATISTICS}")
    X = check_data(X)
    fit = pca_fit(X, scatter) if fit is None else fit
    n, p = fit.n, fit.p
    k = check_k(k, 0, p - 1)
    T = pca_Tk(fit, k) if statistic == "T" else pca_Lk(fit, k)
    mode = "boot_I" if strategy == 1 else "boot_II"
    config = BootstrapConfig(M=M, seed=seed, n_jobs=n_jobs, strict_sequential=strict_sequential)
    draw = pca_sampler(X, k, fit, strategy, rotation)

    def score(rng):
        return _stat_from_values(_replicate_values(draw(rng), fit, tyler_steps), k, statistic)

    out = bootstrap_pvalue(T, score, config)
    details = {"statistic_name": statistic, "d_hat": float(fit.values[k:].mean()),
               "mc_variance": out.variance, "retries": out.retries,
               "eigenvalues": fit.values.tolist()}
    if fit.scatter_kind == "tyler3":
        details["tyler_steps"] = tyler_steps
    return TestResult("pca", k, float(T), out.p_value, mode, {"df": _df(p, k)}, n, p,
                      scatter=fit.scatter_kind, M=config.M, seed=out.seed, details=details)


def pca_test(X, k: int, method: str = "asymp", scatter: str = "cov", statistic: str = "T",
             M: int = 500, seed=None, **kwargs) -> TestResult:
    """Dispatch on ``method`` in ``{"asymp", "boot1", "boot2"}``."""
    if method == "asymp":
        return pca_asymp_pvalue(X, k, scatter, statistic, fit=kwargs.get("fit"))
    if method in ("boot1", "boot2"):
        return pca_boot_pvalue(X, k, scatter, int(method[-1]), M, seed, statistic, **kwargs)
    raise UsageError(f"unknown PCA method {method!r}")
