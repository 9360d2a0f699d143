"""scikit-learn compatible wrappers around the ARX identification routines.

Time-series estimators need the load history at prediction time, so
``predict`` and ``score`` take the realized loads as ``y``::

    est = TwoStepARX(ar_lags=(1, 3, 5), x_lags=(1, 2)).fit(prices, loads)
    q_hat = est.predict(prices, loads)      # one-step-ahead, NaN where undefined
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ..stats.descriptive import quantile
from .arx import fit_arrays
from .tf import stability, to_transfer_function


def _price_vector(X):
    X = check_array(X, ensure_2d=False, ensure_all_finite="allow-nan", dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single price column, got {X.shape[1]}")
        X = X[:, 0]
    return X


def _load_vector(y, n):
    y = check_array(y, ensure_2d=False, ensure_all_finite="allow-nan", dtype=float).ravel()
    if y.size != n:
        raise ValueError("prices and loads must have the same length")
    return y


class TwoStepARX(RegressorMixin, BaseEstimator):
    """Load-on-price ARX model identified by the two-step least-squares procedure.

    Parameters
    ----------
    ar_lags : tuple of int
        Lags of the load entering the autoregression.
    x_lags : tuple of int
        Lags of the (transformed) price.
    transform : {"identity", "log"}
        Static input nonlinearity; ``"log"`` gives a Hammerstein model.
    log_base : float or None
        Base of the logarithm; None means natural log.
    method : {"two-step", "joint"}
        ``"joint"`` fits all regressors in one least-squares problem instead.
    interval_mins : int
        Sampling interval recorded in the fitted model.
    """

    def __init__(self, ar_lags=(1, 3, 5), x_lags=(1, 2), transform="identity", log_base=None,
                 method="two-step", interval_mins=15):
        self.ar_lags = ar_lags
        self.x_lags = x_lags
        self.transform = transform
        self.log_base = log_base
        self.method = method
        self.interval_mins = interval_mins

    def fit(self, X, y, row_mask=None):
        """Fit on a price vector ``X`` and the aligned load vector ``y`` (NaN = missing).

        ``row_mask`` optionally restricts which target times enter the regression.
        """
        prices = _price_vector(X)
        loads = _load_vector(y, prices.size)
        result = fit_arrays(loads, prices, self.ar_lags, self.x_lags, self.transform, self.log_base,
                            row_mask, self.method, self.interval_mins)
        self.result_ = result
        self.model_ = result.model
        self.step1_ = result.step1
        self.step2_ = result.step2
        self.r2_ = result.r2
        self.coef_ = np.r_[result.model.ar_coeffs, result.model.x_coeffs]
        self.intercept_ = result.model.intercept
        self.n_features_in_ = 1
        return self

    def predict(self, X, y):
        """One-step-ahead load predictions given prices and realized loads."""
        check_is_fitted(self, "model_")
        prices = _price_vector(X)
        loads = _load_vector(y, prices.size)
        return self.model_.one_step(loads, prices)

    def score(self, X, y, sample_weight=None):
        """R^2 of one-step predictions over the rows where they are defined."""
        pred = self.predict(X, y)
        y = np.asarray(y, dtype=float).ravel()
        ok = np.isfinite(pred) & np.isfinite(y)
        w = np.ones(ok.sum()) if sample_weight is None else np.asarray(sample_weight, float)[ok]
        resid = y[ok] - pred[ok]
        ybar = np.average(y[ok], weights=w)
        return 1.0 - np.sum(w * resid**2) / np.sum(w * (y[ok] - ybar) ** 2)

    def transfer_function(self):
        check_is_fitted(self, "model_")
        return to_transfer_function(self.model_)

    def stability(self):
        return stability(self.transfer_function())


class HammersteinARX(TwoStepARX):
    """Delayed log-price response model used for the high-price regime."""

    def __init__(self, ar_lags=(1, 2, 4), x_lags=(4,), transform="log", log_base=None,
                 method="two-step", interval_mins=15):
        super().__init__(ar_lags, x_lags, transform, log_base, method, interval_mins)


class RegimeThreshold(TransformerMixin, BaseEstimator):
    """Learns a price threshold and flags samples above it.

    ``threshold`` overrides the learned quantile when given.
    """

    def __init__(self, quantile=0.95, threshold=None):
        self.quantile = quantile
        self.threshold = threshold

    def fit(self, X, y=None):
        prices = _price_vector(X)
        if self.threshold is not None:
            self.threshold_ = float(self.threshold)
        else:
            self.threshold_ = quantile(prices, self.quantile)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "threshold_")
        prices = _price_vector(X)
        return (prices > self.threshold_).astype(int)[:, None]
