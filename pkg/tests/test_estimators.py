import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from axda.estimators import AXDALassoRegressor, AXDALogisticRegression, QuadraticPenaltyLasso, TVInpainter
from axda.models.lasso import soft_threshold


def test_params_round_trip():
    est = AXDALassoRegressor(tau=2.0, rho=0.05)
    params = est.get_params()
    assert params["tau"] == 2.0 and params["rho"] == 0.05
    est.set_params(n_iter=10)
    assert est.n_iter == 10
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    assert not hasattr(twin, "coef_")


@pytest.mark.parametrize("cls", [AXDALassoRegressor, QuadraticPenaltyLasso, AXDALogisticRegression])
def test_predict_before_fit(cls):
    with pytest.raises(NotFittedError):
        cls().predict(np.zeros((2, 2)))


def test_penalty_lasso_matches_soft_threshold():
    X = np.array([[2.0]])
    y = np.array([1.0])
    est = QuadraticPenaltyLasso(tau=1.0, rho=1e-4).fit(X, y)
    assert est.coef_[0] == pytest.approx(soft_threshold(2.0, 1.0) / 4.0, abs=1e-3)
    assert np.all(np.diff(est.objective_trace_) <= 0.0)
    assert est.predict(np.array([[1.0], [-2.0]])) == pytest.approx([est.coef_[0], -2 * est.coef_[0]])


def test_sampled_lasso_deterministic_and_shrinks():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    y = X @ np.array([2.0, 0.0, -1.0]) + 0.1 * rng.normal(size=30)
    a = AXDALassoRegressor(tau=1.0, sigma=0.1, rho=0.05, n_iter=400, seed=5).fit(X, y)
    b = AXDALassoRegressor(tau=1.0, sigma=0.1, rho=0.05, n_iter=400, seed=5).fit(X, y)
    assert a.coef_.tobytes() == b.coef_.tobytes()
    assert a.samples_.shape[1] == 3
    ls = np.linalg.lstsq(X, y, rcond=None)[0]
    assert np.allclose(a.coef_, ls, atol=0.1)
    assert a.score(X, y) > 0.95


def test_logistic_classifier():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 2))
    y = np.where(X @ np.array([3.0, -2.0]) > 0, "yes", "no")
    est = AXDALogisticRegression(tau=0.1, rho=0.3, n_iter=300, seed=2).fit(X, y)
    assert list(est.classes_) == ["no", "yes"]
    proba = est.predict_proba(X)
    assert np.allclose(proba.sum(axis=1), 1.0)
    assert est.score(X, y) > 0.85
    agree = np.mean((est.decision_function(X) > 0) == (est.predict(X) == "yes"))
    assert agree > 0.9
    with pytest.raises(ValueError):
        est.fit(X, np.zeros(40))


def test_inpainter_fills_missing_pixels():
    img = np.zeros((6, 6))
    img[:, 3:] = 1.0
    holes = img.copy()
    holes[2, 4] = np.nan
    holes[3, 1] = np.nan
    out = TVInpainter(sigma=0.05, tau=5.0, rho=0.1, n_iter=300, seed=0).fit_transform(holes)
    assert out.shape == img.shape and np.all(np.isfinite(out))
    assert abs(out[2, 4] - 1.0) < 0.3 and abs(out[3, 1]) < 0.3
