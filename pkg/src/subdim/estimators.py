"""scikit-learn style estimators wrapping the dimension tests.

Each estimator fits its scatter pair, estimates the signal dimension by
sequential testing (unless ``n_components`` is given) and projects new data
on the estimated signal directions.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_data, check_k, check_response
from .bootstrap import derive_seed, estimate_dimension, new_seed
from .exceptions import InvalidInput
from .fobi import fobi_asymp_pvalue, fobi_boot_pvalue, fobi_fit
from .pca import pca_asymp_pvalue, pca_boot_pvalue, pca_fit
from .sir import sir_asymp_pvalue, sir_boot_pvalue, sir_fit


class _SubspaceBase(TransformerMixin, BaseEstimator):
    """Shared fitting logic; subclasses provide ``fit``, ``_test`` and ``_p_max``."""

    def _setup(self, X):
        X = check_data(X)
        self.n_features_in_ = X.shape[1]
        self.seed_ = new_seed() if self.random_state is None else int(self.random_state)
        return X

    def _finish(self):
        p_max = self._p_max()
        if self.n_components is None:
            sched = None if self.alpha_schedule is None else tuple(self.alpha_schedule)
            self.estimate_ = estimate_dimension(self.test, p_max, self.strategy, self.alpha, sched,
                                                n=self.n_samples_)
            self.dimension_ = self.estimate_.q_hat
        else:
            self.estimate_ = None
            self.dimension_ = check_k(self.n_components, 0, self.n_features_in_)
        return self

    def _test_seed(self, k):
        return derive_seed(self.seed_, int(k))

    def test(self, k: int):
        """Test ``H0k`` on the training sample with the configured method."""
        check_is_fitted(self, "model_")
        return self._test(int(k))

    def _check_transform_input(self, X):
        check_is_fitted(self, "model_")
        X = check_data(X, min_samples=1)
        if X.shape[1] != self.n_features_in_:
            raise InvalidInput(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X


class PCASubspace(_SubspaceBase):
    """Principal components with a test-based number of components.

    Parameters
    ----------
    n_components : int, optional
        Fixed dimension; estimated by sequential testing when None.
    scatter : {"cov", "tyler", "tyler3"}
    method : {"asymp", "boot1", "boot2"}
    statistic : {"T", "L"}
    M : int
        Bootstrap replicates.
    alpha : float
        Fixed test level, ignored when ``alpha_schedule = (n0, alpha0)`` is set.
    strategy : {"bottom-up", "top-down", "divide-conquer"}
    random_state : int, optional
        Master seed; the test of ``H0k`` uses a seed derived from it and k.

    Attributes
    ----------
    model_ : PcaFit
    dimension_ : int
    estimate_ : DimensionEstimate or None
    components_ : ndarray of shape (dimension_, n_features)
    """

    def __init__(self, n_components=None, scatter="cov", method="asymp", statistic="T", M=500,
                 alpha=0.05, alpha_schedule=None, strategy="bottom-up", tyler_steps=3,
                 random_state=None):
        self.n_components = n_components
        self.scatter = scatter
        self.method = method
        self.statistic = statistic
        self.M = M
        self.alpha = alpha
        self.alpha_schedule = alpha_schedule
        self.strategy = strategy
        self.tyler_steps = tyler_steps
        self.random_state = random_state

    def fit(self, X, y=None):
        X = self._setup(X)
        self.X_fit_ = X
        self.n_samples_ = X.shape[0]
        self.model_ = pca_fit(X, self.scatter)
        self._finish()
        self.components_ = self.model_.eigen.vectors[:, : self.dimension_].T
        self.location_ = self.model_.scatter.location
        return self

    def _p_max(self):
        return self.n_features_in_ - 1

    def _test(self, k):
        if self.method == "asymp":
            return pca_asymp_pvalue(self.X_fit_, k, self.scatter, self.statistic, fit=self.model_)
        return pca_boot_pvalue(self.X_fit_, k, self.scatter, 1 if self.method == "boot1" else 2,
                               self.M, self._test_seed(k), self.statistic, self.tyler_steps,
                               fit=self.model_)

    def transform(self, X):
        X = self._check_transform_input(X)
        return (X - self.location_) @ self.components_.T


class FOBISubspace(_SubspaceBase):
    """FOBI unmixing restricted to the estimated non-Gaussian components.

    Parameters are as for :class:`PCASubspace`, with ``variant`` in
    ``{"ica", "ngca"}`` choosing the asymptotic variance estimate and
    ``method`` in ``{"asymp", "boot1", "boot2"}``.
    """

    def __init__(self, n_components=None, method="asymp", variant="ica", M=500, alpha=0.05,
                 alpha_schedule=None, strategy="bottom-up", random_state=None):
        self.n_components = n_components
        self.method = method
        self.variant = variant
        self.M = M
        self.alpha = alpha
        self.alpha_schedule = alpha_schedule
        self.strategy = strategy
        self.random_state = random_state

    def fit(self, X, y=None):
        X = self._setup(X)
        self.X_fit_ = X
        self.n_samples_ = X.shape[0]
        self.model_ = fobi_fit(X)
        self._finish()
        self.unmixing_ = self.model_.W[: self.dimension_]
        return self

    def _p_max(self):
        return self.n_features_in_

    def _test(self, k):
        if self.method == "asymp":
            return fobi_asymp_pvalue(self.X_fit_, k, self.variant, fit=self.model_)
        return fobi_boot_pvalue(self.X_fit_, k, 1 if self.method == "boot1" else 2, self.M,
                                self._test_seed(k), fit=self.model_)

    def transform(self, X):
        X = self._check_transform_input(X)
        return (X - self.model_.mean) @ self.unmixing_.T


class SIRSubspace(_SubspaceBase):
    """Sliced inverse regression with a test-based number of directions.

    ``fit`` requires the response ``y``. ``method`` is ``"asymp"`` or
    ``"boot"``; ``n_slices`` is the requested slice count.
    """

    def __init__(self, n_components=None, n_slices=10, method="asymp", M=500, alpha=0.05,
                 alpha_schedule=None, strategy="bottom-up", freeze_slices=False,
                 slice_method="linear", random_state=None):
        self.n_components = n_components
        self.n_slices = n_slices
        self.method = method
        self.M = M
        self.alpha = alpha
        self.alpha_schedule = alpha_schedule
        self.strategy = strategy
        self.freeze_slices = freeze_slices
        self.slice_method = slice_method
        self.random_state = random_state

    def fit(self, X, y=None):
        if y is None:
            raise InvalidInput("SIRSubspace.fit needs a response y")
        X = self._setup(X)
        self.X_fit_ = X
        self.y_fit_ = check_response(y, X.shape[0])
        self.n_samples_ = X.shape[0]
        self.model_ = sir_fit(X, self.y_fit_, self.n_slices, self.slice_method)
        self._finish()
        self.directions_ = self.model_.W[: self.dimension_]
        return self

    def _p_max(self):
        # H0k with k >= H - 1 has no degrees of freedom
        return min(self.n_features_in_, self.model_.H - 1)

    def _test(self, k):
        if self.method == "asymp":
            return sir_asymp_pvalue(self.X_fit_, self.y_fit_, k, fit=self.model_)
        return sir_boot_pvalue(self.X_fit_, self.y_fit_, k, self.n_slices, self.M, self._test_seed(k),
                               self.freeze_slices, self.slice_method, fit=self.model_)

    def transform(self, X):
        X = self._check_transform_input(X)
        return (X - self.model_.mean) @ self.directions_.T

    @property
    def eigenvalues_(self) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.model_.eigen.values
