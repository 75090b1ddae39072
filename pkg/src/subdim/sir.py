"""Dimension tests for sliced inverse regression.

The between-slice scatter of the inverse regression means, standardised by
the covariance, has at most ``q`` non-zero eigenvalues when the response
depends on ``x`` through ``q`` directions. ``H0k`` is tested with the mean
of the ``p - k`` smallest eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_data, check_k, check_response
from .bootstrap import BootstrapConfig, bootstrap_pvalue
from .exceptions import InvalidSlices, UsageError
from .linalg import EigenSystem, chisq_sf, sym_eigen, sym_power
from .results import TestResult
from .scatter import SliceAssignment, apply_slices, make_slices, mean_cov, sir_between_scatter

CLAMP = 1e-10


@dataclass
class SirFit:
    mean: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    R: np.ndarray
    eigen: EigenSystem
    W: np.ndarray
    slices: SliceAssignment
    n: int
    p: int
    slice_method: str = "linear"

    @property
    def H(self) -> int:
        return self.slices.H

    def directions(self, X) -> np.ndarray:
        """Projections ``W (x - xbar)`` as rows, most informative first."""
        return (check_data(X) - self.mean) @ self.W.T


def sir_fit(X, y, H: int = 10, slice_method: str = "linear", eigen_method: str = "lapack") -> SirFit:
    """Slice ``y``, form the between-slice scatter and decompose ``R``.

    Eigenvalues within ``1e-10`` below zero are roundoff and set to 0.
    """
    X = check_data(X)
    n, p = X.shape
    if n <= p:
        raise UsageError(f"SIR needs n > p, got n={n}, p={p}")
    y = check_response(y, n)
    slices = make_slices(y, H, method=slice_method)
    S1 = mean_cov(X)
    S2 = sir_between_scatter(X, slices)
    root_inv = sym_power(S1.matrix, -0.5)
    R = root_inv @ S2 @ root_inv
    R = 0.5 * (R + R.T)
    es = sym_eigen(R, method=eigen_method)
    vals = np.where((es.values < 0) & (es.values > -CLAMP), 0.0, es.values)
    eigen = EigenSystem(vals, es.vectors)
    return SirFit(S1.location, S1.matrix, S2, R, eigen, eigen.vectors.T @ root_inv, slices, n, p,
                  slice_method)


def sir_Tk(fit, k: int) -> float:
    """Mean of the ``p - k`` smallest eigenvalues (negative roundoff clamped to 0)."""
    d = fit.eigen.values if isinstance(fit, SirFit) else np.sort(np.asarray(fit, float))[::-1]
    k = check_k(k, 0, d.size - 1)
    return float(np.mean(np.maximum(d[k:], 0.0)))


def _check_slices(H, k):
    if H <= k + 1:
        raise InvalidSlices(f"{H} slices give no degrees of freedom for k={k}; increase H")


def sir_asymp_pvalue(X, y, k: int, H: int = 10, slice_method: str = "linear",
                     fit: SirFit | None = None) -> TestResult:
    """Asymptotic test: ``n (p-k) T_k`` against chi-square with ``(p-k)(H-k-1)`` df.

    ``H`` in the degrees of freedom is the number of non-empty slices.
    """
    X = check_data(X)
    fit = sir_fit(X, y, H, slice_method) if fit is None else fit
    n, p = fit.n, fit.p
    k = check_k(k, 0, p - 1)
    _check_slices(fit.H, k)
    T = sir_Tk(fit, k)
    df = (p - k) * (fit.H - k - 1)
    stat = n * (p - k) * T
    return TestResult("sir", k, T, chisq_sf(stat, df), "asymptotic", {"df": df}, n, p, H=fit.H,
                      warnings=list(fit.slices.warnings),
                      details={"scaled_statistic": stat, "slice_method": fit.slice_method,
                               "requested_H": fit.slices.requested_H,
                               "eigenvalues": fit.eigen.values.tolist()})


def sir_sampler(X, y, k: int, fit: SirFit) -> Callable[[np.random.Generator], tuple]:
    """Precompute the SIR null sampler; returns ``rng -> (y*, X*)``.

    The response and the first ``k`` standardised directions are resampled
    jointly by one index, the remaining directions by an independent index,
    which makes ``(y, z1)`` independent of ``z2`` in the bootstrap law.
    """
    X = check_data(X)
    n, p = X.shape
    y = check_response(y, n)
    k = check_k(k, 0, p)
    Z = fit.directions(X)
    back = fit.eigen.vectors.T @ sym_power(fit.S1, 0.5)  # (W')^{-1}

    def draw(rng):
        i1 = rng.integers(0, n, n)
        i2 = rng.integers(0, n, n)
        Zs = np.empty((n, p))
        Zs[:, :k] = Z[i1, :k]
        Zs[:, k:] = Z[i2, k:]
        return y[i1], Zs @ back + fit.mean

    return draw


def sir_resample(X, y, k: int, fit: SirFit, rng):
    return sir_sampler(X, y, k, fit)(rng)


def sir_values(X, slices: SliceAssignment) -> np.ndarray:
    """Eigenvalues of the standardised between-slice scatter via Cholesky whitening."""
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    L = np.linalg.cholesky(Xc.T @ Xc / n)
    Y = np.linalg.solve(L, Xc.T).T
    return np.linalg.eigvalsh(sir_between_scatter(Y, slices))


def sir_boot_pvalue(X, y, k: int, H: int = 10, M: int = 500, seed=None, freeze_slices: bool = False,
                    slice_method: str = "linear", n_jobs: int = 1, strict_sequential: bool = False,
                    fit: SirFit | None = None) -> TestResult:
    """Bootstrap test of ``H0k``.

    Each replicate re-slices ``y*`` at its own quantiles unless
    ``freeze_slices`` is set, in which case the original slice edges are
    reused.
    """
    X = check_data(X)
    fit = sir_fit(X, y, H, slice_method) if fit is None else fit
    n, p = fit.n, fit.p
    k = check_k(k, 0, p - 1)
    T = sir_Tk(fit, k)
    config = BootstrapConfig(M=M, seed=seed, n_jobs=n_jobs, strict_sequential=strict_sequential)
    draw = sir_sampler(X, y, k, fit)
    m = p - k
    requested = fit.slices.requested_H

    def score(rng):
        ys, Xs = draw(rng)
        sl = apply_slices(ys, fit.slices) if freeze_slices else make_slices(ys, requested, slice_method)
        vals = np.sort(sir_values(Xs, sl))
        return float(np.mean(np.maximum(vals[:m], 0.0)))

    out = bootstrap_pvalue(T, score, config)
    return TestResult("sir", k, T, out.p_value, "bootstrap", {}, n, p, H=fit.H, M=config.M,
                      seed=out.seed, warnings=list(fit.slices.warnings),
                      details={"mc_variance": out.variance, "retries": out.retries,
                               "freeze_slices": bool(freeze_slices),
                               "slice_method": fit.slice_method,
                               "eigenvalues": fit.eigen.values.tolist()})


def sir_test(X, y, k: int, method: str = "asymp", H: int = 10, M: int = 500, seed=None,
             **kwargs) -> TestResult:
    """Dispatch on ``method`` in ``{"asymp", "boot"}``."""
    if method == "asymp":
        return sir_asymp_pvalue(X, y, k, H, kwargs.get("slice_method", "linear"), fit=kwargs.get("fit"))
    if method == "boot":
        return sir_boot_pvalue(X, y, k, H, M, seed, **kwargs)
    raise UsageError(f"unknown SIR method {method!r}")
