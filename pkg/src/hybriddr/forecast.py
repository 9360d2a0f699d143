"""Prediction and simulation from identified ARX models.

All index arguments refer to one shared timeline: ``loads[i]`` and
``prices[i]`` are the samples at grid position ``i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter, lfiltic

from .exceptions import InsufficientDataError, TransformDomainError
from .stats.correlation import pearson
from .stats.descriptive import moments, normal_probability_plot
from .sysid.arx import ArxModel, apply_transform
from .sysid.tf import stability, to_transfer_function


class InstabilityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ForecastResult:
    times: np.ndarray
    forecasts: np.ndarray
    innovation_std: np.ndarray
    realized: np.ndarray | None = None
    unstable: bool = False

    @property
    def horizon(self):
        return len(self.forecasts)

    @property
    def residuals(self):
        if self.realized is None:
            return None
        return self.realized - self.forecasts

    def rows(self):
        """(t, forecast, realized, residual) tuples for CSV output."""
        realized = self.realized if self.realized is not None else np.full(self.horizon, np.nan)
        return [(int(t), float(f), float(r), float(r - f))
                for t, f, r in zip(self.times, self.forecasts, realized)]


def _input(model, prices):
    try:
        return apply_transform(prices, model.transform, model.log_base)
    except TransformDomainError:
        raise TransformDomainError("log transform requires positive prices over the forecast window") from None


def predict_one_step(model: ArxModel, loads, prices, t=None) -> float:
    """Noise-free prediction of ``Q(t)`` from loads and prices before ``t``.

    ``t`` defaults to ``len(loads)``, i.e. the next sample after the history.
    """
    loads = np.asarray(loads, dtype=float)
    prices = np.asarray(prices, dtype=float)
    t = len(loads) if t is None else int(t)
    need_q = max(model.ar_lags, default=0)
    need_p = max(model.x_lags, default=0)
    if t - need_q < 0 or t - need_p < 0:
        raise InsufficientDataError(f"history does not cover lag {model.max_lag} before t={t}")
    if model.ar_lags and t - min(model.ar_lags) >= len(loads):
        raise InsufficientDataError(f"load history does not reach t - {min(model.ar_lags)}")
    if model.x_lags and t - min(model.x_lags) >= len(prices):
        raise InsufficientDataError(f"price history does not reach t - {min(model.x_lags)}")
    q = model.intercept
    for lag, a in zip(model.ar_lags, model.ar_coeffs):
        q += a * loads[t - lag]
    if model.x_lags:
        idx = np.array([t - lag for lag in model.x_lags])
        u = _input(model, prices[idx])
        q += float(np.dot(model.x_coeffs, u))
    return float(q)


def _drive(model, prices, start, n, noise=None):
    """Intercept + price terms (+ noise) for targets start..start+n-1."""
    d = np.full(n, model.intercept)
    if model.x_lags:
        t = np.arange(start, start + n)
        lo = t.min() - max(model.x_lags)
        hi = t.max() - min(model.x_lags)
        if lo < 0 or hi >= len(prices):
            raise InsufficientDataError("prices do not cover the lags of every simulated sample")
        u = _input(model, np.asarray(prices[lo:hi + 1], dtype=float))
        for lag, b in zip(model.x_lags, model.x_coeffs):
            d += b * u[t - lag - lo]
    if noise is not None:
        d += noise
    return d


def _recurse(model, history, drive):
    """Run ``Q(t) = sum a_i Q(t - i) + drive(t)`` forward from the given history."""
    if not model.ar_lags:
        return np.asarray(drive, dtype=float).copy()
    den = to_transfer_function(model).den
    order = len(den) - 1
    if len(history) < order:
        raise InsufficientDataError(f"need {order} initial loads, got {len(history)}")
    past = np.asarray(history[-order:], dtype=float)[::-1]
    if not np.all(np.isfinite(past)):
        raise InsufficientDataError("initial load history contains missing samples")
    zi = lfiltic([1.0], den, past)
    out, _ = lfilter([1.0], den, drive, zi=zi)
    return out


def _innovation_std(model, sigma, k):
    den = to_transfer_function(model).den
    impulse = np.zeros(k)
    impulse[0] = 1.0
    psi = lfilter([1.0], den, impulse)
    return sigma * np.sqrt(np.cumsum(psi**2))


def _check_stability(model):
    if model.ar_lags and not stability(model).stable:
        warnings.warn("model is not stable; multi-step forecasts may diverge", InstabilityWarning, stacklevel=3)
        return True
    return False


def forecast_k(model: ArxModel, loads, prices, k, origin=None) -> ForecastResult:
    """Iterated forecasts of ``Q(origin) .. Q(origin + k - 1)``.

    Loads before ``origin`` are treated as known; forecasts feed back into the
    autoregressive terms. Prices must be supplied over the whole horizon.
    Realized values are attached when ``loads`` extends past ``origin``.
    """
    loads = np.asarray(loads, dtype=float)
    origin = len(loads) if origin is None else int(origin)
    if k < 1:
        raise ValueError("horizon must be at least 1")
    if origin - model.max_lag < 0:
        raise InsufficientDataError(f"history before origin {origin} shorter than max lag {model.max_lag}")
    unstable = _check_stability(model)
    drive = _drive(model, np.asarray(prices, dtype=float), origin, k)
    path = _recurse(model, loads[:origin], drive)
    realized = None
    if len(loads) >= origin + k:
        realized = loads[origin:origin + k].copy()
    return ForecastResult(np.arange(origin, origin + k), path,
                          _innovation_std(model, model.noise_std, k), realized, unstable)


def simulate(model: ArxModel, initial_loads, prices, n, noise_std=None, seed=0, offset=None) -> np.ndarray:
    """Draw ``n`` loads following the initial history, driven by i.i.d. Gaussian noise.

    ``prices`` is indexed on the same timeline as ``initial_loads`` and must
    cover ``len(initial_loads) + n`` samples' lags. The noise comes from the
    package's seeded generator (see ``synth.make_rng``). ``offset`` is an
    optional extra input added to each of the ``n`` simulated samples.
    """
    from .synth import make_rng

    sigma = model.noise_std if noise_std is None else float(noise_std)
    init = np.asarray(initial_loads, dtype=float)
    start = len(init)
    if start < model.max_lag:
        raise InsufficientDataError(f"need at least {model.max_lag} initial samples")
    noise = make_rng(seed).standard_normal(n) * sigma if sigma > 0 else None
    drive = _drive(model, np.asarray(prices, dtype=float), start, n, noise)
    if offset is not None:
        drive = drive + np.asarray(offset, dtype=float)
    return _recurse(model, init, drive)


def forecast_at_events(model: ArxModel, loads, prices, anchors, horizon, mode="one-step") -> ForecastResult:
    """Forecast ``Q(a + horizon)`` for each anchor time ``a``.

    ``"one-step"`` uses realized loads up to the target; ``"open-loop"``
    starts at ``a + 1`` from loads known through ``a`` and iterates
    ``horizon`` steps. Anchors whose window touches missing data are skipped.
    """
    if mode not in ("one-step", "open-loop"):
        raise ValueError("mode must be 'one-step' or 'open-loop'")
    loads = np.asarray(loads, dtype=float)
    prices = np.asarray(prices, dtype=float)
    one = model.one_step(loads, prices)
    targets, preds = [], []
    for a in np.asarray(anchors, dtype=int):
        t = a + horizon
        if t >= len(loads) or a + 1 - model.max_lag < 0 or not np.isfinite(loads[t]):
            continue
        if mode == "one-step":
            f = one[t]
        else:
            hist = loads[:a + 1]
            if not np.all(np.isfinite(hist[-max(model.max_lag, 1):])):
                continue
            try:
                f = forecast_k(model, hist, prices, horizon, origin=a + 1).forecasts[-1]
            except InsufficientDataError:
                continue
        if np.isfinite(f):
            targets.append(t)
            preds.append(f)
    targets = np.array(targets, dtype=int)
    preds = np.array(preds, dtype=float)
    k = 1 if mode == "one-step" else horizon
    std = np.full(len(preds), _innovation_std(model, model.noise_std, k)[-1])
    return ForecastResult(targets, preds, std, loads[targets])


@dataclass(frozen=True)
class ResidualDiagnostics:
    kurtosis: float
    skewness: float
    correlation: float
    n: int
    probability_plot: list

    def to_dict(self):
        return {"kurtosis": self.kurtosis, "skewness": self.skewness, "correlation": self.correlation,
                "n": self.n}


def residual_diagnostics(result: ForecastResult) -> ResidualDiagnostics:
    """Normality and fit checks on forecast errors.

    Raises ``DegenerateInputError`` when the residuals are constant (for
    example a perfect forecast).
    """
    if result.realized is None:
        raise ValueError("residual diagnostics need realized values")
    resid = result.residuals
    corr = pearson(result.forecasts, result.realized)
    m = moments(resid)
    return ResidualDiagnostics(m.kurtosis, m.skewness, corr, m.n, normal_probability_plot(resid))
