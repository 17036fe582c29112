"""scikit-learn style wrappers around the samplers and the penalty solver.

The estimators follow the usual contract: hyper-parameters are stored
verbatim by ``__init__``, ``fit`` validates its inputs and sets trailing
underscore attributes, and ``get_params``/``set_params`` come from
``BaseEstimator``.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .models.inpainting import InpaintingModel, inpainting_split_model
from .models.lasso import LassoTarget, lasso_split_model
from .models.logistic import LogisticModel, logistic_split_model
from .optimize import PenaltyProblem, quadratic_penalty_minimize
from .samplers.gibbs import run_split_gibbs


class AXDALassoRegressor(RegressorMixin, BaseEstimator):
    """Posterior mean of a (generalized) lasso regression by split Gibbs sampling.

    Parameters
    ----------
    tau : float
        l1 regularization weight.
    sigma : float
        Noise standard deviation.
    rho : float
        Coupling tolerance.
    analysis : array of shape (k, n_features) or None
        Matrix ``B`` of the prior ``tau ||B theta||_1``; identity when None.
    n_iter, burnin, seed : sampler settings.
    """

    def __init__(self, tau=1.0, sigma=1.0, rho=0.1, analysis=None, n_iter=2000, burnin=None, seed=0):
        self.tau = tau
        self.sigma = sigma
        self.rho = rho
        self.analysis = analysis
        self.n_iter = n_iter
        self.burnin = burnin
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        B = np.eye(X.shape[1]) if self.analysis is None else check_array(self.analysis)
        target = LassoTarget(y=y, X=X, B=B, tau=self.tau, sigma=self.sigma)
        chain = run_split_gibbs(lasso_split_model(target, self.rho), self.n_iter,
                                burnin=self.burnin, seed=self.seed)
        self.samples_ = chain.samples
        self.coef_ = chain.mean()
        self.potential_trace_ = chain.potential_trace
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_


class QuadraticPenaltyLasso(RegressorMixin, BaseEstimator):
    """Point estimate of the lasso from the quadratically penalized split objective."""

    def __init__(self, tau=1.0, sigma=1.0, rho=1e-3, analysis=None, max_outer=500, tol=1e-10,
                 continuation=True):
        self.tau = tau
        self.sigma = sigma
        self.rho = rho
        self.analysis = analysis
        self.max_outer = max_outer
        self.tol = tol
        self.continuation = continuation

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        B = np.eye(X.shape[1]) if self.analysis is None else check_array(self.analysis)
        target = LassoTarget(y=y, X=X, B=B, tau=self.tau, sigma=self.sigma)
        problem = PenaltyProblem.from_split_model(lasso_split_model(target, self.rho))
        levels = None
        if self.continuation:
            levels = [r for r in np.logspace(0, -8, 9) if r > self.rho] + [self.rho]
        res = quadratic_penalty_minimize(problem, self.max_outer, self.tol, continuation=levels)
        self.coef_ = res.theta
        self.objective_trace_ = res.objective_trace
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X) @ self.coef_


class AXDALogisticRegression(ClassifierMixin, BaseEstimator):
    """Bayesian ridge-logistic regression sampled with one split block per observation.

    ``sign=-1`` (default here) uses the conventional loss ``log(1 + exp(-y t))``.
    """

    def __init__(self, tau=1.0, rho=0.3, n_iter=2000, burnin=None, seed=0, sign=-1):
        self.tau = tau
        self.rho = rho
        self.n_iter = n_iter
        self.burnin = burnin
        self.seed = seed
        self.sign = sign

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError("AXDALogisticRegression needs exactly two classes")
        labels = np.where(y == self.classes_[1], 1.0, -1.0)
        model = LogisticModel(y=labels, X=X, tau=self.tau, rho=self.rho, sign=self.sign)
        chain = run_split_gibbs(logistic_split_model(model, use_ars=False), self.n_iter,
                                burnin=self.burnin, seed=self.seed)
        self.samples_ = chain.samples
        self.coef_ = chain.mean()
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return -self.sign * (check_array(X) @ self.coef_)

    def predict_proba(self, X):
        # posterior-averaged probability of the positive class
        check_is_fitted(self, "coef_")
        scores = -self.sign * (check_array(X) @ self.samples_.T)
        p1 = np.mean(1.0 / (1.0 + np.exp(-scores)), axis=1)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self.classes_[(self.predict_proba(X)[:, 1] > 0.5).astype(int)]


class TVInpainter(TransformerMixin, BaseEstimator):
    """Fill missing pixels (NaN) of a 2-D image with the TV-posterior mean."""

    def __init__(self, sigma=0.07, tau=5.0, rho=0.1, n_iter=2000, burnin=None, seed=0):
        self.sigma = sigma
        self.tau = tau
        self.rho = rho
        self.n_iter = n_iter
        self.burnin = burnin
        self.seed = seed

    def fit(self, X, y=None):
        check_array(X, ensure_all_finite="allow-nan")
        return self

    def transform(self, X):
        img = check_array(X, ensure_all_finite="allow-nan")
        observed = ~np.isnan(img.ravel())
        mask = np.flatnonzero(observed)
        model = InpaintingModel(img.ravel()[mask], mask, img.shape, self.sigma, self.tau, self.rho)
        chain = run_split_gibbs(inpainting_split_model(model), self.n_iter, burnin=self.burnin,
                                seed=self.seed)
        self.samples_ = chain.samples
        self.potential_trace_ = chain.potential_trace
        return chain.mean().reshape(img.shape)
