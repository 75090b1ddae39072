"""Dense symmetric linear algebra and reference distributions.

Everything here works on small dense matrices (p up to a few hundred) and is
pure: results depend only on the arguments, and random draws come from the
caller's :class:`numpy.random.Generator`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .exceptions import InvalidInput, SingularMatrix


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in descending order with matching orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


class MomentTriple(NamedTuple):
    m1: float
    m2: float
    s2: float


def as_symmetric(A, name="matrix") -> np.ndarray:
    """Validate a square finite matrix and return ``(A + A') / 2``.

    All producers in this package are symmetric up to roundoff, so the input
    is symmetrised instead of being rejected.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidInput(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} has non-finite entries")
    return 0.5 * (A + A.T)


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive; argmax takes the lowest index on ties
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = 100):
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix.

    Returns unsorted ``(values, vectors)``. Orthonormality of the vectors
    holds to a few ulps because every update is a plane rotation.
    """
    a = np.array(A, dtype=float)
    p = a.shape[0]
    v = np.eye(p)
    scale = np.sqrt(np.sum(a * a))
    if scale == 0.0:
        return np.zeros(p), v
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if abs(aij) <= 1e-300:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * aij)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                elif theta != 0:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                else:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ai = a[:, i].copy()
                aj = a[:, j].copy()
                a[:, i] = c * ai - s * aj
                a[:, j] = s * ai + c * aj
                ri = a[i, :].copy()
                rj = a[j, :].copy()
                a[i, :] = c * ri - s * rj
                a[j, :] = s * ri + c * rj
                vi = v[:, i].copy()
                vj = v[:, j].copy()
                v[:, i] = c * vi - s * vj
                v[:, j] = s * vi + c * vj
    return np.diag(a).copy(), v


def sym_eigen(A, method: str = "lapack") -> EigenSystem:
    """Eigen-decomposition of a symmetric matrix.

    Parameters
    ----------
    A : array-like of shape (p, p)
        Symmetric input; symmetrised before decomposition.
    method : {"lapack", "jacobi"}
        ``"lapack"`` calls :func:`numpy.linalg.eigh`; ``"jacobi"`` runs the
        cyclic Jacobi iteration in :func:`jacobi_eigh`.

    Returns
    -------
    EigenSystem
        Values in descending order. Each eigenvector is signed so that its
        largest-magnitude entry is positive (lowest index wins ties), which
        makes repeated fits bit-reproducible.
    """
    A = as_symmetric(A)
    if method == "lapack":
        w, V = np.linalg.eigh(A)
    elif method == "jacobi":
        w, V = jacobi_eigh(A)
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    order = np.argsort(-w, kind="stable")
    return EigenSystem(w[order], _canonical_signs(V[:, order]))


def eigen_moments(values) -> MomentTriple:
    d = np.asarray(values, dtype=float)
    m1 = float(d.mean())
    m2 = float(np.mean(d * d))
    s2 = float(np.mean((d - m1) ** 2))
    return MomentTriple(m1, m2, s2)


def matrix_moments(A) -> MomentTriple:
    """First two eigenvalue moments and eigenvalue variance via traces.

    ``m1 = tr(A)/p``, ``m2 = tr(A^2)/p`` (with ``tr(A^2)`` the sum of squared
    entries) and ``s2 = m2 - m1^2``.
    """
    A = as_symmetric(A)
    p = A.shape[0]
    m1 = float(np.trace(A)) / p
    m2 = float(np.sum(A * A)) / p
    # the centred form avoids cancellation when m1 is large
    C = A - m1 * np.eye(p)
    s2 = max(float(np.sum(C * C)) / p, 0.0)
    return MomentTriple(m1, m2, s2)


_POWERS = {0.5, -0.5, -1.0, 1.0}


def sym_power(A, exponent: float) -> np.ndarray:
    """Symmetric matrix power ``U D^exponent U'`` of a positive definite matrix."""
    if exponent not in _POWERS:
        raise ValueError(f"exponent must be one of {sorted(_POWERS)}")
    A = as_symmetric(A)
    w, V = np.linalg.eigh(A)
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise SingularMatrix("matrix is not positive definite")
    return (V * w**exponent) @ V.T


def haar_orthogonal(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw orthogonal matrices from the Haar measure on O(dim).

    QR of a standard normal matrix with the columns of Q multiplied by the
    signs of diag(R), which makes the factorisation unique and the law of Q
    exactly Haar. With ``size`` given, returns a stack of shape
    ``(size, dim, dim)``.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    shape = (dim, dim) if size is None else (size, dim, dim)
    G = rng.standard_normal(shape)
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return Q * d[..., None, :]


def chisq_sf(x: float, df: int) -> float:
    """Upper tail ``P(chi2_df >= x)`` via the regularized incomplete gamma."""
    if df <= 0:
        raise ValueError("df must be positive")
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def weighted_chisq_mix_sf(x: float, a: float, df_a: int, b: float) -> float:
    """Upper tail of ``a * chi2_{df_a} + b * chi2_1`` with independent terms.

    With ``s = u**2`` the density of the first term becomes smooth in ``u``,
    so the convolution integral

        sf(x / a; df_a) + int_0^sqrt(x/a) 2u f(u^2; df_a) sf((x - a u^2)/b; 1) du

    is handled well by adaptive quadrature. ``df_a == 0`` drops the first term.
    """
    if a <= 0 or b <= 0:
        raise ValueError("weights must be positive")
    if df_a < 0:
        raise ValueError("df_a must be non-negative")
    if x <= 0:
        return 1.0
    if df_a == 0:
        return chisq_sf(x / b, 1)
    upper = np.sqrt(x / a)
    half = 0.5 * df_a
    log_norm = -half * np.log(2.0) - special.gammaln(half)

    def integrand(u):
        if u <= 0.0:
            return 0.0
        s = u * u
        dens = 2.0 * u * np.exp(log_norm + (half - 1.0) * np.log(s) - 0.5 * s)
        return dens * special.erfc(np.sqrt(max(x - a * s, 0.0) / (2.0 * b)))

    val, _ = integrate.quad(integrand, 0.0, upper, epsabs=1e-11, epsrel=1e-10, limit=200)
    tail = chisq_sf(x / a, df_a)
    return float(min(1.0, max(0.0, tail + val)))
