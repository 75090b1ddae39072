import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.linear_model import LinearRegression
from sklearn.pipeline import make_pipeline

from subdim import FOBISubspace, PCASubspace, SIRSubspace
from subdim.exceptions import InvalidInput


def pca_data(n=800, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, 5)) * np.r_[3.0, 2.0, 1.0, 1.0, 1.0]


def ica_data(n=2000, seed=1):
    rng = np.random.default_rng(seed)
    Z = np.column_stack([rng.exponential(size=n) - 1, (rng.random(n) - 0.5) * np.sqrt(12),
                         rng.standard_normal((n, 3))])
    return Z @ (rng.standard_normal((5, 5)) + 3 * np.eye(5)).T


def sir_data(n=1000, seed=2):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 5))
    return X, X[:, 0] * (X[:, 0] + X[:, 1] + 1) + 0.5 * rng.standard_normal(n)


class TestParams:
    @pytest.mark.parametrize("cls", [PCASubspace, FOBISubspace, SIRSubspace])
    def test_clone(self, cls):
        est = cls(M=17, alpha=0.01, random_state=3)
        twin = clone(est)
        assert twin.get_params() == est.get_params() and twin is not est

    def test_set_params(self):
        est = PCASubspace().set_params(scatter="tyler", strategy="top-down")
        assert est.get_params()["scatter"] == "tyler"

    @pytest.mark.parametrize("cls", [PCASubspace, FOBISubspace, SIRSubspace])
    def test_not_fitted(self, cls):
        with pytest.raises(NotFittedError):
            cls().transform(np.zeros((3, 5)))


class TestPCA:
    def test_estimated_dimension(self):
        est = PCASubspace(random_state=0).fit(pca_data())
        assert est.dimension_ == 2 and est.components_.shape == (2, 5)
        assert [d.k for d in est.estimate_.decisions] == [0, 1, 2]

    def test_transform(self):
        X = pca_data()
        est = PCASubspace(n_components=2).fit(X)
        Y = est.transform(X)
        assert Y.shape == (800, 2) and est.estimate_ is None
        np.testing.assert_allclose(np.cov(Y.T, bias=True), np.diag(est.model_.values[:2]), atol=1e-8)
        np.testing.assert_allclose(est.fit_transform(X), Y)

    def test_bootstrap_method(self):
        est = PCASubspace(method="boot2", M=39, random_state=4, strategy="divide-conquer").fit(pca_data())
        assert est.dimension_ == 2
        assert est.test(2).p_value == est.test(2).p_value

    def test_wrong_width(self):
        est = PCASubspace(n_components=1).fit(pca_data())
        with pytest.raises(InvalidInput):
            est.transform(np.zeros((2, 4)))


class TestFOBI:
    def test_estimated_dimension(self):
        est = FOBISubspace(random_state=0).fit(ica_data())
        assert est.dimension_ == 2
        S = est.transform(ica_data())
        np.testing.assert_allclose(np.cov(S.T, bias=True), np.eye(2), atol=1e-8)


class TestSIR:
    def test_estimated_dimension(self):
        X, y = sir_data()
        est = SIRSubspace(random_state=0).fit(X, y)
        assert est.dimension_ == 2
        assert np.all(est.eigenvalues_[:2] > est.eigenvalues_[2])

    def test_needs_response(self):
        with pytest.raises(InvalidInput):
            SIRSubspace().fit(sir_data()[0])

    def test_pipeline(self):
        X, y = sir_data()
        pipe = make_pipeline(SIRSubspace(n_components=2), LinearRegression()).fit(X, y)
        assert pipe.predict(X[:5]).shape == (5,)
