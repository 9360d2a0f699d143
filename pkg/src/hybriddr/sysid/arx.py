"""ARX / Hammerstein-ARX identification by two-step least squares.

Model, in backshift notation with ``g`` the input nonlinearity (identity or
log)::

    Q(t) = sum_i a_i Q(t - i) + sum_j b_j g(P(t - j)) + c + e(t)

Step 1 regresses Q on its own lags and a constant; step 2 regresses the
step-1 residual on the lagged, transformed prices and a constant. The
combined model adds the two intercepts.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DomainError, InsufficientDataError, SingularDesignError, TransformDomainError
from ..ingest import AlignedSeries, time_of_day_mask
from ..stats.descriptive import quantile
from .ols import OlsFit, ols

TRANSFORMS = ("identity", "log")


def _lags(lags):
    out = tuple(sorted(int(v) for v in lags))
    if any(v < 1 for v in out) or len(set(out)) != len(out):
        raise ValueError(f"lags must be distinct positive integers (got {lags})")
    return out


@dataclass(frozen=True)
class ArxModel:
    ar_lags: tuple = ()
    ar_coeffs: tuple = ()
    x_lags: tuple = ()
    x_coeffs: tuple = ()
    intercept: float = 0.0
    transform: str = "identity"
    log_base: float | None = None
    noise_std: float = 0.0
    interval_mins: int = 15
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ar_lags, x_lags = _lags(self.ar_lags), _lags(self.x_lags)
        if list(ar_lags) != [int(v) for v in self.ar_lags] or list(x_lags) != [int(v) for v in self.x_lags]:
            raise ValueError("lag lists must be strictly increasing")
        if len(ar_lags) != len(self.ar_coeffs) or len(x_lags) != len(self.x_coeffs):
            raise ValueError("one coefficient per lag is required")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}")
        object.__setattr__(self, "ar_lags", ar_lags)
        object.__setattr__(self, "x_lags", x_lags)
        object.__setattr__(self, "ar_coeffs", tuple(float(v) for v in self.ar_coeffs))
        object.__setattr__(self, "x_coeffs", tuple(float(v) for v in self.x_coeffs))
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def max_lag(self):
        return max(self.ar_lags + self.x_lags, default=0)

    def transform_input(self, prices):
        """Apply the static input nonlinearity to a price array."""
        return apply_transform(prices, self.transform, self.log_base)

    def dc_gain(self):
        """Steady-state load change per unit of transformed price."""
        return sum(self.x_coeffs) / (1.0 - sum(self.ar_coeffs))

    def steady_state(self, price):
        """Fixed point of the noise-free recursion under a constant price."""
        u = float(self.transform_input(np.array([price]))[0]) if self.x_lags else 0.0
        return (self.intercept + sum(self.x_coeffs) * u) / (1.0 - sum(self.ar_coeffs))

    def one_step(self, loads, prices):
        """One-step-ahead predictions for every index (NaN where lags are missing)."""
        loads = np.asarray(loads, dtype=float)
        prices = np.asarray(prices, dtype=float)
        n = len(loads)
        out = np.full(n, np.nan)
        m = self.max_lag
        if n <= m:
            return out
        pred = np.full(n - m, self.intercept)
        for lag, a in zip(self.ar_lags, self.ar_coeffs):
            pred += a * loads[m - lag:n - lag]
        if self.x_lags:
            u = _safe_transform(prices, self.transform, self.log_base)
            for lag, b in zip(self.x_lags, self.x_coeffs):
                pred += b * u[m - lag:n - lag]
        out[m:] = pred
        return out

    def to_dict(self):
        return {
            "ar_lags": list(self.ar_lags),
            "ar_coeffs": list(self.ar_coeffs),
            "x_lags": list(self.x_lags),
            "x_coeffs": list(self.x_coeffs),
            "intercept": self.intercept,
            "transform": self.transform,
            "log_base": self.log_base,
            "noise_std": self.noise_std,
            "interval_mins": self.interval_mins,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            ar_lags=tuple(d.get("ar_lags", ())),
            ar_coeffs=tuple(d.get("ar_coeffs", ())),
            x_lags=tuple(d.get("x_lags", ())),
            x_coeffs=tuple(d.get("x_coeffs", ())),
            intercept=d.get("intercept", 0.0),
            transform=d.get("transform", "identity"),
            log_base=d.get("log_base"),
            noise_std=d.get("noise_std", 0.0),
            interval_mins=d.get("interval_mins", 15),
            meta=dict(d.get("meta", {})),
        )

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def apply_transform(prices, transform="identity", log_base=None):
    p = np.asarray(prices, dtype=float)
    if transform == "identity":
        return p
    if transform != "log":
        raise ValueError(f"unknown transform {transform!r}")
    finite = p[np.isfinite(p)]
    if np.any(finite <= 0):
        raise TransformDomainError("log transform requires strictly positive prices")
    u = np.log(p)
    if log_base is not None:
        u = u / math.log(log_base)
    return u


def _safe_transform(prices, transform, log_base):
    # nonpositive prices become NaN; callers decide whether that is an error
    p = np.asarray(prices, dtype=float)
    if transform == "log":
        p = np.where(p > 0, p, np.nan)
    return apply_transform(p, transform, log_base)


@dataclass(frozen=True)
class RegressionRows:
    """Target indices with their lagged regressors, complete cases only."""

    rows: np.ndarray
    target: np.ndarray
    ar: np.ndarray
    x: np.ndarray


def build_rows(loads, prices, ar_lags, x_lags, transform="identity", log_base=None, row_mask=None):
    """Collect every target index whose lag window is fully observed.

    A row ``t`` is kept when ``Q(t)``, all ``Q(t - i)`` and all ``P(t - j)``
    are finite and ``row_mask[t]`` is set. With the log transform, a
    nonpositive price inside a kept row raises ``TransformDomainError``.
    """
    q = np.asarray(loads, dtype=float)
    p = np.asarray(prices, dtype=float)
    n = len(q)
    if len(p) != n:
        raise ValueError("loads and prices must have equal length")
    m = max(tuple(ar_lags) + tuple(x_lags), default=0)
    t = np.arange(m, n)
    ok = np.isfinite(q[t])
    for lag in ar_lags:
        ok &= np.isfinite(q[t - lag])
    for lag in x_lags:
        ok &= np.isfinite(p[t - lag])
    if row_mask is not None:
        ok &= np.asarray(row_mask, dtype=bool)[t]
    t = t[ok]
    ar = np.column_stack([q[t - lag] for lag in ar_lags]) if ar_lags else np.empty((t.size, 0))
    xr = np.column_stack([p[t - lag] for lag in x_lags]) if x_lags else np.empty((t.size, 0))
    if transform == "log" and xr.size and np.any(xr <= 0):
        raise TransformDomainError("log transform requires positive prices in every regression row")
    xr = apply_transform(xr, transform, log_base)
    return RegressionRows(t, q[t], ar, xr)


@dataclass(frozen=True)
class ArxFit:
    """Identified model plus the regressions that produced it.

    ``r2`` and ``rmse`` refer to the combined model measured against the
    variance of the original load over the regression rows.
    """

    model: ArxModel
    step1: OlsFit
    step2: OlsFit | None
    r2: float
    rmse: float
    rows: np.ndarray
    method: str = "two-step"

    @property
    def residuals(self):
        return (self.step2 or self.step1).residuals

    def report(self):
        out = {
            "method": self.method,
            "model": self.model.to_dict(),
            "step1": self.step1.to_dict(),
            "combined": {"r2": self.r2, "rmse": self.rmse, "n_obs": int(self.rows.size)},
        }
        if self.step2 is not None:
            out["step2"] = self.step2.to_dict()
        return out


def _ar_names(lags):
    return [f"alpha_{lag}" for lag in lags]


def _x_names(lags, transform):
    fmt = "beta_{}" if transform == "identity" else "beta_{}_log"
    return [fmt.format(lag) for lag in lags]


def _check_rows(n_rows, n_coef):
    if n_rows < n_coef + 1:
        raise InsufficientDataError(f"only {n_rows} complete regression rows for {n_coef} coefficients")


def _with_const(*blocks):
    n = blocks[0].shape[0]
    return np.column_stack(list(blocks) + [np.ones(n)])


def fit_arrays(loads, prices, ar_lags=(1, 3, 5), x_lags=(1, 2), transform="identity", log_base=None,
               row_mask=None, method="two-step", interval_mins=15, rows=None) -> ArxFit:
    """Two-step (default) or joint ARX fit on raw arrays; NaN marks missing samples.

    ``rows`` restricts the fit to explicit target indices (used for
    train/test splits) on top of ``row_mask``.
    """
    ar_lags, x_lags = _lags(ar_lags), _lags(x_lags)
    if transform not in TRANSFORMS:
        raise ValueError(f"transform must be one of {TRANSFORMS}")
    if method not in ("two-step", "joint"):
        raise ValueError("method must be 'two-step' or 'joint'")
    rr = build_rows(loads, prices, ar_lags, x_lags, transform, log_base, row_mask)
    if rows is not None:
        keep = np.isin(rr.rows, np.asarray(rows, dtype=int))
        rr = RegressionRows(rr.rows[keep], rr.target[keep], rr.ar[keep], rr.x[keep])
    y = rr.target
    sst = float(np.sum((y - y.mean()) ** 2)) if y.size else 0.0
    meta = {"method": method, "n_obs": int(rr.rows.size)}

    if method == "joint":
        _check_rows(y.size, len(ar_lags) + len(x_lags) + 1)
        names = _ar_names(ar_lags) + _x_names(x_lags, transform) + ["const"]
        fit = ols(_with_const(rr.ar, rr.x), y, names)
        na = len(ar_lags)
        model = ArxModel(ar_lags, tuple(fit.estimates[:na]), x_lags, tuple(fit.estimates[na:-1]),
                         fit.estimates[-1], transform, log_base, fit.rmse, interval_mins, meta)
        return ArxFit(model, fit, None, fit.r2, fit.rmse, rr.rows, "joint")

    _check_rows(y.size, len(ar_lags) + 1)
    step1 = ols(_with_const(rr.ar), y, _ar_names(ar_lags) + ["const"])
    alpha = step1.estimates[:-1]
    if not x_lags:
        model = ArxModel(ar_lags, tuple(alpha), (), (), step1.estimates[-1], transform, log_base,
                         step1.rmse, interval_mins, meta)
        return ArxFit(model, step1, None, step1.r2, step1.rmse, rr.rows)

    _check_rows(y.size, len(x_lags) + 1)
    q_res = step1.residuals
    step2 = ols(_with_const(rr.x), q_res, _x_names(x_lags, transform) + ["const"])
    intercept = step1.estimates[-1] + step2.estimates[-1]
    r2 = 1.0 - step2.ssr / sst if sst > 0 else 1.0
    model = ArxModel(ar_lags, tuple(alpha), x_lags, tuple(step2.estimates[:-1]), intercept, transform,
                     log_base, step2.rmse, interval_mins, meta)
    return ArxFit(model, step1, step2, float(r2), step2.rmse, rr.rows)


def _arrays(series):
    if isinstance(series, AlignedSeries):
        return series.masked_loads(), series.masked_prices(), series.interval
    loads, prices = series
    return np.asarray(loads, float), np.asarray(prices, float), 15


def fit_ar(series, lags=(1, 3, 5), row_mask=None) -> ArxFit:
    """Autoregression of load on its own lags plus a constant.

    ``series`` is an ``AlignedSeries`` or a ``(loads, prices)`` pair. The
    residual series used by the second step is ``result.step1.residuals``.
    """
    q, p, interval = _arrays(series)
    return fit_arrays(q, p, lags, (), row_mask=row_mask, interval_mins=interval)


def two_step_arx(series, ar_lags=(1, 3, 5), x_lags=(1, 2), transform="identity", log_base=None,
                 row_mask=None, method="two-step") -> ArxFit:
    q, p, interval = _arrays(series)
    return fit_arrays(q, p, ar_lags, x_lags, transform, log_base, row_mask, method, interval)


def select_lags(series, max_lag, criterion="t-prune", threshold=2.0, pinned=None, row_mask=None):
    """Choose the AR lag set.

    ``"t-prune"`` starts from lags 1..max_lag and repeatedly removes the lag
    with the smallest |t| until every remaining |t| reaches ``threshold``.
    Exactly collinear lags are removed first (largest lag first).
    ``"pinned"`` returns ``pinned`` unchanged.
    """
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if criterion == "pinned":
        if pinned is None:
            raise ValueError("pinned criterion needs an explicit lag set")
        return _lags(pinned)
    if criterion != "t-prune":
        raise ValueError(f"unknown criterion {criterion!r}")
    q, p, _ = _arrays(series)
    lags = list(range(1, max_lag + 1))
    while lags:
        try:
            fit = fit_arrays(q, p, lags, (), row_mask=row_mask)
        except SingularDesignError as err:
            # pivoting may report the constant instead of a lag; the
            # largest lag is then the one to drop
            dependent = [int(c.split("_")[1]) for c in err.columns if c.startswith("alpha_")]
            lags.remove(max(dependent or lags))
            continue
        tvals = np.abs(fit.step1.t[:-1])
        worst = int(np.argmin(tvals))
        if tvals[worst] >= threshold:
            return tuple(lags)
        del lags[worst]
    warnings.warn("t-prune removed every lag; no significant autoregressive structure", stacklevel=2)
    return ()


@dataclass(frozen=True)
class RegimeSplit:
    threshold: float
    moderate: np.ndarray
    high: np.ndarray

    def moderate_mask(self, n):
        m = np.zeros(n, dtype=bool)
        m[self.moderate] = True
        return m

    def high_mask(self, n):
        m = np.zeros(n, dtype=bool)
        m[self.high] = True
        return m


def split_regimes(series: AlignedSeries, q=None, threshold=None) -> RegimeSplit:
    """Partition valid samples at a price threshold (explicit, or the ``q`` quantile).

    High-price samples satisfy P > threshold strictly.
    """
    if (q is None) == (threshold is None):
        raise ValueError("give exactly one of q or threshold")
    p = series.masked_prices()
    valid = np.isfinite(p)
    if q is not None:
        if not 0.0 < q < 1.0:
            raise DomainError(f"regime quantile must lie in (0, 1) (got {q})")
        if valid.sum() < 20:
            raise InsufficientDataError("quantile split needs at least 20 valid samples")
        threshold = quantile(p[valid], q)
    threshold = float(threshold)
    high = valid & (p > threshold)
    return RegimeSplit(threshold, np.flatnonzero(valid & ~high), np.flatnonzero(high))


def moderate_rows(series: AlignedSeries, threshold, x_lags):
    """Target rows whose own price and lagged prices are all at or below ``threshold``."""
    p = series.masked_prices()
    ok = np.isfinite(p) & (p <= threshold)
    rows = ok.copy()
    for lag in x_lags:
        rows[lag:] &= ok[:-lag]
        rows[:lag] = False
    return rows


def peak_rows(series: AlignedSeries, anchor_lag, window=("14:00", "14:30"), threshold=None,
              surge_days_only=False):
    """Target rows for the high-price model.

    A target ``t`` qualifies when the price at ``t - anchor_lag`` falls in
    the time-of-day ``window``. With ``threshold`` set, that anchored price
    must exceed it; ``surge_days_only`` instead keeps every window slot on
    days where some in-window price exceeds ``threshold``.
    """
    n = len(series)
    anchor = np.zeros(n, dtype=bool)
    in_window = time_of_day_mask(series, *window) & series.mask
    p = series.masked_prices()
    if surge_days_only:
        if threshold is None:
            raise ValueError("surge_days_only needs a threshold")
        days = series.day_index()
        surge_days = np.unique(days[in_window & (p > threshold)])
        sel = in_window & np.isin(days, surge_days)
    elif threshold is not None:
        sel = in_window & (p > threshold)
    else:
        sel = in_window
    anchor[anchor_lag:] = sel[:n - anchor_lag] if anchor_lag else sel
    return anchor


@dataclass(frozen=True)
class CrossValidation:
    train: ArxFit
    train_r2: float
    test_r2: float
    test_rmse: float
    train_rows: np.ndarray
    test_rows: np.ndarray

    def to_dict(self):
        return {
            "train_r2": self.train_r2,
            "test_r2": self.test_r2,
            "test_rmse": self.test_rmse,
            "n_train": int(self.train_rows.size),
            "n_test": int(self.test_rows.size),
        }


def evaluate(model: ArxModel, loads, prices, rows):
    """R^2 and RMSE of one-step predictions at the given target rows."""
    rows = np.asarray(rows, dtype=int)
    pred = model.one_step(loads, prices)[rows]
    y = np.asarray(loads, dtype=float)[rows]
    resid = y - pred
    ssr = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2))
    return (1.0 - ssr / sst if sst > 0 else float(ssr == 0)), float(np.sqrt(ssr / rows.size))


def cross_validate(series, ar_lags=(1, 3, 5), x_lags=(1, 2), transform="identity", log_base=None,
                   split_fraction=0.5, seed=0, row_mask=None, method="two-step") -> CrossValidation:
    """Random half split of regression rows: fit on one part, score on the other."""
    from ..synth import make_rng

    if not 0.0 < split_fraction < 1.0:
        raise DomainError("split_fraction must lie in (0, 1)")
    q, p, interval = _arrays(series)
    ar_lags, x_lags = _lags(ar_lags), _lags(x_lags)
    rr = build_rows(q, p, ar_lags, x_lags, transform, log_base, row_mask)
    perm = make_rng(seed).permutation(rr.rows.size)
    n_train = int(round(split_fraction * rr.rows.size))
    train = np.sort(rr.rows[perm[:n_train]])
    test = np.sort(rr.rows[perm[n_train:]])
    if test.size < 2:
        raise InsufficientDataError("test split is too small")
    fit = fit_arrays(q, p, ar_lags, x_lags, transform, log_base, row_mask, method, interval, rows=train)
    test_r2, test_rmse = evaluate(fit.model, q, p, test)
    return CrossValidation(fit, fit.r2, test_r2, test_rmse, train, test)

