"""scikit-learn style regressors over the functional core.

``NTKGaussianProcessRegressor`` predicts with the law ``G_t`` of an
infinitely wide network trained for time ``t``; ``ShallowNetworkRegressor``
trains one finite network by gradient descent; ``LinearizedNetworkRegressor``
solves the linearized dynamics of one finite network in closed form.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import gp, lindyn, matops
from .activations import get_activation
from .network import Dataset, empirical_ntk, forward, init_params, train_gd


def _check_activation(name):
    return get_activation(name).name


class NTKGaussianProcessRegressor(RegressorMixin, BaseEstimator):
    """Gaussian-process regressor with the moments of ``G_t``.

    ``t=np.inf`` is not supported; use a large finite time to approach the
    kernel-regression predictor.
    """

    def __init__(self, activation="tanh", t=1.0, quadrature_order=None, level=0.95,
                 random_state=0):
        self.activation = activation
        self.t = t
        self.quadrature_order = quadrature_order
        self.level = level
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        _check_activation(self.activation)
        matops.check_time(self.t)
        self.limit_ = gp.LimitingGP(X, y, self.activation, self.quadrature_order)
        if self.t > 0:
            self.limit_.check_assumption()
        self.n_features_in_ = X.shape[1]
        return self

    def _moments(self, X):
        check_is_fitted(self, "limit_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.limit_.moments(X, self.t)

    def predict(self, X, return_std=False, return_cov=False):
        if return_std and return_cov:
            raise ValueError("return_std and return_cov are mutually exclusive")
        m = self._moments(X)
        if return_cov:
            return m.mean, m.cov
        if return_std:
            return m.mean, np.sqrt(np.clip(m.var, 0.0, None))
        return m.mean

    def predict_band(self, X, level=None):
        lo, hi = gp.gp_band(self._moments(X), self.level if level is None else level)
        return lo, hi

    def sample_y(self, X, n_samples=1, random_state=None):
        """Draws of ``G_t`` on ``X``; shape ``(len(X), n_samples)``."""
        seed = self.random_state if random_state is None else random_state
        return gp.sample_gp(self._moments(X), n_samples, seed, "sample_y").T


class ShallowNetworkRegressor(RegressorMixin, BaseEstimator):
    """One shallow network trained by full-batch gradient descent."""

    def __init__(self, width=256, activation="tanh", lr=0.1, steps=100, random_state=0):
        self.width = width
        self.activation = activation
        self.lr = lr
        self.steps = steps
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        _check_activation(self.activation)
        p0 = init_params(X.shape[1], self.width, self.random_state)
        self.trajectory_ = train_gd(p0, self.activation, Dataset(X, y), self.lr, self.steps)
        self.params_ = self.trajectory_.final
        self.loss_ = float(self.trajectory_.losses[-1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=float)
        return np.atleast_1d(forward(self.params_, self.activation, X))


class LinearizedNetworkRegressor(RegressorMixin, BaseEstimator):
    """Closed-form gradient flow of the linearization of one shallow network."""

    def __init__(self, width=256, activation="tanh", t=1.0, random_state=0):
        self.width = width
        self.activation = activation
        self.t = t
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        _check_activation(self.activation)
        matops.check_time(self.t)
        p0 = init_params(X.shape[1], self.width, self.random_state)
        self.state_ = lindyn.linearize(p0, self.activation, X)
        It = matops.i_t(self.state_.k0_train, self.t, eig=self.state_.eig)
        self.dual_coef_ = It @ (self.state_.f0_train - y)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=float)
        s = self.state_
        f0 = np.atleast_1d(forward(s.base, s.act, X))
        return f0 - empirical_ntk(s.base, s.act, X, s.X_train) @ self.dual_coef_
