"""Input checks shared by the functional API and the estimators."""

import numpy as np

from .exceptions import InvalidInput, InvalidK


def check_data(X, min_samples=2, name="X"):
    """Return ``X`` as a finite float array of shape (n, p).

    One-dimensional input is read as a single column.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidInput(f"{name} must be 2-dimensional, got {X.ndim} dimensions")
    n, p = X.shape
    if p < 1:
        raise InvalidInput(f"{name} has no columns")
    if n < min_samples:
        raise InvalidInput(f"{name} needs at least {min_samples} rows, got {n}")
    if not np.all(np.isfinite(X)):
        raise InvalidInput(f"{name} contains non-finite values")
    return X


def check_response(y, n):
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != n:
        raise InvalidInput(f"response has {y.shape[0]} values but X has {n} rows")
    if not np.all(np.isfinite(y)):
        raise InvalidInput("response contains non-finite values")
    return y


def check_k(k, low, high):
    """``k`` must be an integer in the closed range [low, high]."""
    if isinstance(k, bool) or int(k) != k:
        raise InvalidK(f"k must be an integer, got {k!r}")
    k = int(k)
    if not low <= k <= high:
        raise InvalidK(f"k must lie in [{low}, {high}], got {k}")
    return k
