"""Empirical probability of a price spike some delay after a conditioning price.

For a time-of-day window W, a price range R and a delay k,

    p(k) = #{t in W : P(t) in R, spike(t + k)} / #{t in W : P(t) in R, t + k valid}

and the baseline is the spike frequency over all valid samples in W.
Counts are stored alongside the ratios so every probability can be
recomputed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InsufficientDataError
from .ingest import AlignedSeries, time_of_day_mask
from .stats.descriptive import quantile
from .stats.distributions import normal_ppf

DEFAULT_WINDOWS = (("03:00", "09:00"), ("09:00", "15:00"))
DEFAULT_SPIKE_QUANTILE = 0.95


def spike_indicator(series, threshold, mask=None) -> np.ndarray:
    """True where ``P(t) > threshold`` at a valid sample.

    ``series`` is an ``AlignedSeries`` or a plain price array (NaN marks a
    missing sample).
    """
    if isinstance(series, AlignedSeries):
        p = series.masked_prices()
    else:
        p = np.asarray(series, dtype=float)
    hit = np.isfinite(p) & (p > threshold)
    if mask is not None:
        hit &= np.asarray(mask, dtype=bool)
    return hit


def parse_price_range(text, prices=None):
    """Parse ``"lo:hi"`` into numeric bounds.

    Each bound is a number, ``inf``/``-inf``, or ``qNN`` meaning the NN-th
    percentile of ``prices`` (so ``"q90:q100"`` is the top decile).
    """
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ValueError(f"price range must look like 'lo:hi' (got {text!r})")

    def bound(s):
        s = s.strip().lower()
        if s.startswith("q"):
            if prices is None:
                raise ValueError("quantile bounds need the price sample")
            level = float(s[1:]) / 100.0
            if not 0.0 <= level <= 1.0:
                raise DomainError(f"percentile out of range in {text!r}")
            return quantile(prices, level)
        return float(s)

    lo, hi = bound(parts[0]), bound(parts[1])
    if lo > hi:
        raise ValueError(f"empty price range {text!r}")
    return lo, hi


@dataclass(frozen=True)
class SpikeProbProfile:
    window: tuple
    price_range: tuple
    threshold: float
    delays: np.ndarray
    counts: np.ndarray
    hits: np.ndarray
    baseline: float
    baseline_count: int

    @property
    def probabilities(self):
        """``hits / counts``; NaN where nothing was conditioned on."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.counts > 0, self.hits / np.maximum(self.counts, 1), np.nan)

    def standard_errors(self):
        """Binomial standard error of each lag's frequency under the baseline rate."""
        b = self.baseline
        with np.errstate(divide="ignore"):
            return np.where(self.counts > 0, np.sqrt(b * (1.0 - b) / np.maximum(self.counts, 1)), np.nan)

    def band(self, level=0.95, simultaneous=True):
        """Half-width of the binomial band around the baseline.

        With ``simultaneous`` the two-sided level is split over the lags
        (Bonferroni), so the band covers every lag at once.
        """
        m = int(np.sum(self.counts > 0)) if simultaneous else 1
        z = normal_ppf(1.0 - (1.0 - level) / (2.0 * max(m, 1)))
        return z * self.standard_errors()

    def excess(self):
        """Conditional minus baseline in units of the binomial standard error."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.probabilities - self.baseline) / self.standard_errors()

    def rows(self):
        """(lag, conditional, baseline, count) rows for CSV output."""
        return [(int(k), float(p), self.baseline, int(c))
                for k, p, c in zip(self.delays, self.probabilities, self.counts)]

    def to_dict(self):
        return {
            "window": list(self.window),
            "price_range": [float(x) for x in self.price_range],
            "threshold": self.threshold,
            "baseline": self.baseline,
            "baseline_count": self.baseline_count,
            "lags": [
                {"lag": k, "conditional": None if np.isnan(p) else p, "count": c, "hits": int(h)}
                for (k, p, _, c), h in zip(self.rows(), self.hits)
            ],
        }


def conditional_spike_prob(series: AlignedSeries, price_range=None, window=DEFAULT_WINDOWS[1],
                           delays=range(1, 25), threshold=None) -> SpikeProbProfile:
    """Spike frequency ``k`` steps after an in-window price inside ``price_range``.

    ``threshold`` defaults to the 95% quantile of valid prices and
    ``price_range`` to ``(threshold, inf)``, i.e. conditioning on a spike.
    The range is closed at both ends. Lags with an empty conditioning set
    get count 0 and a NaN probability.
    """
    p = series.masked_prices()
    valid = np.isfinite(p)
    if not valid.any():
        raise InsufficientDataError("no valid prices")
    if threshold is None:
        threshold = quantile(p[valid], DEFAULT_SPIKE_QUANTILE)
    if price_range is None:
        price_range = (np.nextafter(threshold, np.inf), np.inf)
    lo, hi = (float(x) for x in price_range)
    delays = np.asarray(list(delays), dtype=int)
    if delays.size == 0 or np.any(delays < 0):
        raise ValueError("delays must be a non-empty list of nonnegative lags")

    in_window = valid & time_of_day_mask(series, *window)
    spike = spike_indicator(p, threshold)
    base_n = int(in_window.sum())
    if base_n == 0:
        raise InsufficientDataError(f"no valid samples in window {window[0]}-{window[1]}")
    baseline = float(spike[in_window].sum()) / base_n

    cond = np.flatnonzero(in_window & (p >= lo) & (p <= hi))
    n = len(p)
    counts = np.zeros(delays.size, dtype=int)
    hits = np.zeros(delays.size, dtype=int)
    for i, k in enumerate(delays):
        t = cond[cond + k < n]
        t = t[valid[t + k]]
        counts[i] = t.size
        hits[i] = int(spike[t + k].sum())
    return SpikeProbProfile(tuple(window), (lo, hi), float(threshold), delays, counts, hits,
                            baseline, base_n)
