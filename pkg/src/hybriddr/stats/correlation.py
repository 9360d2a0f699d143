"""Autocorrelation, partial autocorrelation and event-conditioned lag statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ConditioningError, DegenerateInputError, InsufficientDataError
from .distributions import Z_975


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    values: np.ndarray
    confidence_band: float
    n: int

    def significant(self):
        """Lags (excluding 0) whose value lies outside the white-noise band."""
        return self.lags[1:][np.abs(self.values[1:]) > self.confidence_band]

    def to_dict(self):
        return {
            "lags": self.lags.tolist(),
            "values": self.values.tolist(),
            "confidence_band": self.confidence_band,
            "n": self.n,
        }


def _centered(x, mask):
    x = np.asarray(x, dtype=float).ravel()
    ok = np.isfinite(x)
    if mask is not None:
        ok &= np.asarray(mask, dtype=bool).ravel()
    n = int(ok.sum())
    if n == 0:
        raise DegenerateInputError("no valid samples")
    d = np.where(ok, x - x[ok].mean(), 0.0)
    return d, n


def acf(x, max_lag, mask=None) -> AcfResult:
    """Sample autocorrelation for lags 0..max_lag.

    Invalid samples contribute zero to every lagged product (the lag structure
    of the grid is kept), and every sum is normalized by the valid count, so
    the values stay within [-1, 1].
    """
    d, n = _centered(x, mask)
    if max_lag < 1 or max_lag >= n / 2:
        raise ValueError(f"max_lag must satisfy 1 <= max_lag < n/2 = {n / 2}")
    c0 = float(d @ d)
    if c0 <= 0.0:
        raise DegenerateInputError("constant series: autocorrelation undefined")
    vals = np.empty(max_lag + 1)
    vals[0] = 1.0
    for k in range(1, max_lag + 1):
        vals[k] = float(d[k:] @ d[:-k]) / c0
    return AcfResult(np.arange(max_lag + 1), vals, Z_975 / np.sqrt(n), n)


def durbin_levinson(r, max_lag):
    """Partial autocorrelations from autocorrelations ``r[0..max_lag]`` (``r[0] == 1``)."""
    phi = np.zeros(max_lag + 1)
    pac = np.empty(max_lag + 1)
    pac[0] = 1.0
    v = 1.0
    for k in range(1, max_lag + 1):
        num = r[k] - phi[1:k] @ r[k - 1:0:-1]
        a = num / v
        if not np.isfinite(a) or abs(a) >= 1.0:
            raise ConditioningError(f"Toeplitz system is numerically singular at lag {k}")
        new = phi.copy()
        new[k] = a
        new[1:k] = phi[1:k] - a * phi[k - 1:0:-1]
        phi = new
        v *= 1.0 - a * a
        if v <= 1e-14:
            raise ConditioningError(f"prediction error variance vanished at lag {k}")
        pac[k] = a
    return pac


def pacf(x, max_lag, mask=None) -> AcfResult:
    r = acf(x, max_lag, mask)
    vals = durbin_levinson(r.values, max_lag)
    return AcfResult(r.lags, vals, r.confidence_band, r.n)


def pearson(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - a.mean()
    db = b - b.mean()
    den = np.sqrt((da @ da) * (db @ db))
    if den == 0.0:
        raise DegenerateInputError("correlation undefined for a constant sample")
    return float(np.clip((da @ db) / den, -1.0, 1.0))


def lagged_correlation(events, x, y, k):
    """Pearson correlation of ``x[t]`` and ``y[t + k]`` over event times ``t``.

    Pairs running off the end of ``y`` or touching a NaN are skipped.
    """
    events = np.asarray(events, dtype=int)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = events[(events >= 0) & (events + k < len(y)) & (events + k >= 0) & (events < len(x))]
    xs, ys = x[t], y[t + k]
    ok = np.isfinite(xs) & np.isfinite(ys)
    if ok.sum() < 3:
        raise InsufficientDataError(f"need at least 3 usable event pairs at lag {k} (got {int(ok.sum())})")
    return pearson(xs[ok], ys[ok])


def surge_onsets(series, threshold, window_mask=None):
    """Indices where the price first exceeds ``threshold`` (previous sample at or below it)."""
    p = series.masked_prices()
    above = p > threshold
    prev_ok = np.r_[False, np.isfinite(p[:-1]) & (p[:-1] <= threshold)]
    hit = above & prev_ok & series.mask
    if window_mask is not None:
        hit &= np.asarray(window_mask, bool)
    return np.flatnonzero(hit)


def price_jumps(series):
    """``P(t) - P(t-1)``; NaN where either sample is invalid."""
    p = series.masked_prices()
    return np.r_[np.nan, np.diff(p)]


def avg_change_after_surge(series, p_min, p_max, k):
    """Mean of ``Q(t + k) - Q(t)`` over valid ``t`` with ``p_min <= P(t) <= p_max``."""
    p = series.masked_prices()
    q = series.masked_loads()
    n = len(p)
    t = np.flatnonzero((p >= p_min) & (p <= p_max))
    t = t[(t + k < n) & (t + k >= 0)]
    t = t[np.isfinite(q[t + k])]
    if t.size == 0:
        raise InsufficientDataError(f"no samples with price in [{p_min}, {p_max}] and a valid load at lag {k}")
    if k == 0:
        return 0.0
    return float(np.mean(q[t + k] - q[t]))


def avg_change_profile(series, p_min, p_max, max_lag):
    return np.array([avg_change_after_surge(series, p_min, p_max, k) for k in range(max_lag + 1)])


def post_surge_groups(series, events, max_lag):
    """Loads ``Q(t + k)`` over event times, one group per lag 0..max_lag (the ANOVA input)."""
    q = series.masked_loads()
    groups = []
    for k in range(max_lag + 1):
        idx = events[events + k < len(q)] + k
        vals = q[idx]
        groups.append(vals[np.isfinite(vals)])
    return groups
