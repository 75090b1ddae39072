"""Scatter and location functionals evaluated at the empirical distribution.

Covariances use the 1/n divisor throughout. Robust estimation pairs Tyler's
shape matrix (trace normalised to p) with the spatial median, the
Hettmansperger-Randles combination.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_data
from .exceptions import (
    ConvergenceFailure,
    DegenerateObservation,
    InsufficientVariation,
    InvalidInput,
    SingularMatrix,
)
from .linalg import sym_power

TYLER_KINDS = ("tyler_full", "tyler_kstep")


@dataclass
class ScatterEstimate:
    """A location vector with a positive definite scatter matrix.

    ``kind`` is one of ``"cov"``, ``"tyler_full"`` or ``"tyler_kstep"``;
    ``steps`` records k for the k-step variant.
    """

    kind: str
    location: np.ndarray
    matrix: np.ndarray
    iterations: int = 0
    converged: bool = True
    steps: int | None = None

    @property
    def is_tyler(self) -> bool:
        return self.kind in TYLER_KINDS


@dataclass
class SliceAssignment:
    """Partition of a response into contiguous slices.

    ``labels`` are 0-based slice indices; ``boundaries`` are the upper edges
    of every slice but the last, and a value equal to an edge belongs to the
    lower slice. Requested slices that received no observation are dropped,
    so ``H`` can be smaller than ``requested_H``.
    """

    H: int
    boundaries: np.ndarray
    labels: np.ndarray
    counts: np.ndarray
    requested_H: int = 0
    warnings: list = field(default_factory=list)


def mean_cov(X) -> ScatterEstimate:
    """Column means and the 1/n-divisor covariance matrix."""
    X = check_data(X)
    mu = X.mean(axis=0)
    Xc = X - mu
    S = Xc.T @ Xc / X.shape[0]
    return ScatterEstimate("cov", mu, 0.5 * (S + S.T))


def mahalanobis_sq(Xc, V) -> np.ndarray:
    """Squared Mahalanobis radii of centred rows with respect to ``V``."""
    Y = Xc @ sym_power(V, -0.5)
    return np.einsum("ij,ij->i", Y, Y)


def _weiszfeld_step(X, mu, eps):
    D = X - mu
    r = np.sqrt(np.einsum("ij,ij->i", D, D))
    at_point = r <= eps
    w = 1.0 / r[~at_point]
    Xf = X[~at_point]
    T = w @ Xf / w.sum()
    eta = int(at_point.sum())
    if eta == 0:
        return T, False
    # Vardi-Zhang modification for an iterate sitting on data points
    Rvec = w @ (Xf - mu)
    rn = np.linalg.norm(Rvec)
    if rn <= eta:
        return mu, True
    gamma = eta / rn
    return (1.0 - gamma) * T + gamma * mu, False


def spatial_median(X, tol: float = 1e-8, max_iter: int = 500, init=None) -> np.ndarray:
    """Minimiser of the sum of Euclidean distances to the rows of ``X``.

    Weiszfeld iteration started at the coordinatewise median, with the
    Vardi-Zhang safeguard whenever an iterate meets a data point. Stops when
    the step is below ``tol`` times the mean distance to the start.

    Raises
    ------
    ConvergenceFailure
        After ``max_iter`` iterations; the last iterate is attached.
    """
    X = check_data(X, min_samples=1)
    mu = np.median(X, axis=0) if init is None else np.asarray(init, dtype=float).copy()
    scale = float(np.mean(np.linalg.norm(X - mu, axis=1)))
    if scale == 0.0:
        return mu
    eps = 1e-12 * scale
    for _ in range(max_iter):
        new, optimal = _weiszfeld_step(X, mu, eps)
        if optimal:
            return mu
        step = np.linalg.norm(new - mu)
        mu = new
        if step <= tol * scale:
            return mu
    raise ConvergenceFailure(f"spatial median did not converge in {max_iter} iterations", mu)


def spatial_median_steps(X, init, steps: int) -> np.ndarray:
    """Exactly ``steps`` safeguarded Weiszfeld updates from ``init``."""
    X = np.asarray(X, dtype=float)
    mu = np.asarray(init, dtype=float).copy()
    scale = float(np.mean(np.linalg.norm(X - mu, axis=1)))
    eps = 1e-12 * max(scale, np.finfo(float).tiny)
    for _ in range(steps):
        mu, optimal = _weiszfeld_step(X, mu, eps)
        if optimal:
            break
    return mu


def _tyler_update(Xc, V, p, n):
    d = mahalanobis_sq(Xc, V)
    if np.any(d <= 1e-300):
        raise DegenerateObservation("an observation coincides with the location")
    Vn = (Xc / d[:, None]).T @ Xc * (p / n)
    Vn = 0.5 * (Vn + Vn.T)
    return Vn * (p / np.trace(Vn))


def tyler_shape(X, location, mode: str = "full", steps: int = 3, init=None,
                tol: float = 1e-8, max_iter: int = 200) -> ScatterEstimate:
    """Tyler's shape matrix about a fixed location, trace normalised to p.

    Parameters
    ----------
    X : array-like of shape (n, p)
    location : array-like of shape (p,)
        Held fixed during the iteration.
    mode : {"full", "kstep"}
        ``"full"`` iterates the fixed-point map from the trace-rescaled
        covariance until the relative Frobenius change is below ``tol``
        (at most ``max_iter`` updates). ``"kstep"`` applies exactly ``steps``
        updates from ``init``.
    """
    X = check_data(X)
    n, p = X.shape
    if n <= p:
        raise InvalidInput(f"Tyler's shape needs n > p, got n={n}, p={p}")
    mu = np.asarray(location, dtype=float)
    Xc = X - mu
    norms = np.linalg.norm(Xc, axis=1)
    if np.any(norms <= 1e-12 * max(norms.max(), 1e-300)):
        raise DegenerateObservation("an observation coincides with the location")
    if mode == "full":
        V = Xc.T @ Xc / n
    elif mode == "kstep":
        if init is None:
            raise ValueError("kstep mode needs an initial shape matrix")
        V = np.array(init, dtype=float)
    else:
        raise ValueError(f"unknown Tyler mode {mode!r}")
    tr = np.trace(V)
    if not tr > 0:
        raise SingularMatrix("initial scatter has non-positive trace")
    V = V * (p / tr)
    limit = max_iter if mode == "full" else steps
    converged = False
    it = 0
    for it in range(1, limit + 1):
        Vn = _tyler_update(Xc, V, p, n)
        change = np.linalg.norm(Vn - V) / np.linalg.norm(V)
        V = Vn
        if change <= tol:
            converged = True
            if mode == "full":
                break
    if mode == "full" and not converged:
        warnings.warn(f"Tyler's shape did not converge in {max_iter} iterations", RuntimeWarning)
    kind = "tyler_full" if mode == "full" else "tyler_kstep"
    return ScatterEstimate(kind, mu.copy(), V, iterations=it, converged=converged,
                           steps=None if mode == "full" else steps)


def hr_estimate(X, tol: float = 1e-8) -> ScatterEstimate:
    """Spatial median with Tyler's shape about it (location estimated once)."""
    X = check_data(X)
    mu = spatial_median(X, tol=tol)
    return tyler_shape(X, mu, mode="full", tol=tol)


def hr_kstep(X, init: ScatterEstimate, steps: int = 3) -> ScatterEstimate:
    """k-step Hettmansperger-Randles update started from another estimate.

    The location takes ``steps`` Weiszfeld updates and the shape ``steps``
    Tyler updates about the updated location, both from ``init``.
    """
    X = check_data(X)
    mu = spatial_median_steps(X, init.location, steps)
    return tyler_shape(X, mu, mode="kstep", steps=steps, init=init.matrix)


def fourth_moment_scatter(X, S1: ScatterEstimate) -> np.ndarray:
    """``(1/n) sum r_i^2 (x_i - m)(x_i - m)'`` with ``r_i`` Mahalanobis in ``S1``."""
    X = check_data(X)
    Xc = X - S1.location
    r2 = mahalanobis_sq(Xc, S1.matrix)
    S2 = (Xc * r2[:, None]).T @ Xc / X.shape[0]
    return 0.5 * (S2 + S2.T)


def sigma1_hat(X, S: ScatterEstimate) -> float:
    """Plug-in estimate of the off-diagonal asymptotic variance constant.

    ``(1/(p(p+2))) * mean(alpha(r_i)^2)`` where ``alpha(r) = r^2`` for the
    covariance and ``alpha = p + 2`` for Tyler's shape, so Tyler kinds give
    ``(p+2)/p`` exactly.
    """
    X = check_data(X)
    p = X.shape[1]
    if S.is_tyler:
        return (p + 2.0) / p
    r2 = mahalanobis_sq(X - S.location, S.matrix)
    return float(np.mean(r2 * r2) / (p * (p + 2.0)))


def _finish_slices(labels, edges, requested_H):
    counts_full = np.bincount(labels, minlength=len(edges) + 1)
    keep = np.flatnonzero(counts_full)
    notes = []
    if len(keep) < len(counts_full):
        notes.append(f"{len(counts_full) - len(keep)} empty slice(s) dropped")
    remap = np.full(len(counts_full), -1)
    remap[keep] = np.arange(len(keep))
    bounds = np.asarray(edges)[keep[:-1]] if len(keep) > 1 else np.empty(0)
    return SliceAssignment(H=len(keep), boundaries=bounds, labels=remap[labels],
                           counts=counts_full[keep], requested_H=requested_H, warnings=notes)


def make_slices(y, H: int = 10, method: str = "linear") -> SliceAssignment:
    """Slice a response at its empirical quantiles ``i/H``, ``i = 1..H-1``.

    ``method`` is passed to :func:`numpy.quantile`; the default ``"linear"``
    is the usual type-7 sample quantile and ``"inverted_cdf"`` the
    inverse empirical CDF. A value equal to an edge goes to the lower slice.
    """
    y = np.asarray(y, dtype=float).ravel()
    if H < 2:
        raise InsufficientVariation("need at least 2 slices")
    if np.unique(y).size < H:
        raise InsufficientVariation(f"response has fewer than H={H} distinct values")
    edges = np.quantile(y, np.arange(1, H) / H, method=method)
    labels = np.searchsorted(edges, y, side="left")
    return _finish_slices(labels, edges, H)


def apply_slices(y, slices: SliceAssignment) -> SliceAssignment:
    """Assign new response values to the fixed edges of an existing slicing."""
    y = np.asarray(y, dtype=float).ravel()
    labels = np.searchsorted(slices.boundaries, y, side="left")
    return _finish_slices(labels, slices.boundaries, slices.H)


def sir_between_scatter(X, slices: SliceAssignment) -> np.ndarray:
    """Between-slice scatter ``(1/n) sum_h n_h (xbar_h - xbar)(xbar_h - xbar)'``."""
    X = check_data(X)
    n = X.shape[0]
    labels = np.asarray(slices.labels)
    if labels.shape[0] != n:
        raise InvalidInput("slice labels do not match the number of rows")
    Xc = X - X.mean(axis=0)
    H = int(labels.max()) + 1
    G = np.zeros((n, H))
    G[np.arange(n), labels] = 1.0
    sums = G.T @ Xc
    counts = G.sum(axis=0)
    nz = counts > 0
    S2 = (sums[nz] / counts[nz, None]).T @ sums[nz] / n
    return 0.5 * (S2 + S2.T)
