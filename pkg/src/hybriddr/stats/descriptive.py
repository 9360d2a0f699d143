"""Moments, quantiles, probability-plot data and time-of-day box summaries."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..exceptions import DegenerateInputError, DomainError
from .distributions import normal_ppf


def valid_values(x, mask=None):
    """Finite entries of ``x`` that are also flagged valid by ``mask``."""
    x = np.asarray(x, dtype=float).ravel()
    ok = np.isfinite(x)
    if mask is not None:
        ok &= np.asarray(mask, dtype=bool).ravel()
    return x[ok]


@dataclass(frozen=True)
class MomentStats:
    """Population (biased) moment estimates.

    ``std`` divides by n, and ``skewness``/``kurtosis`` are the plain ratios
    mu3/sigma^3 and mu4/sigma^4 (kurtosis is not excess kurtosis).
    """

    n: int
    mean: float
    std: float
    skewness: float
    kurtosis: float

    def to_dict(self):
        return asdict(self)


def moments(x, mask=None) -> MomentStats:
    v = valid_values(x, mask)
    n = v.size
    if n < 4:
        raise DegenerateInputError(f"moments need at least 4 valid samples (got {n})")
    mean = float(v.mean())
    d = v - mean
    m2 = float(np.mean(d * d))
    scale = max(abs(mean), float(np.max(np.abs(v))))
    if m2 <= (1e-15 * scale) ** 2:
        raise DegenerateInputError("constant input: skewness and kurtosis are undefined")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    sd = float(np.sqrt(m2))
    return MomentStats(n=n, mean=mean, std=sd, skewness=m3 / sd**3, kurtosis=m4 / m2**2)


def quantile(x, q, mask=None) -> float:
    """Empirical quantile, linear interpolation between order statistics.

    With sorted values v[0..n-1] the result is v[h] interpolated at
    h = q * (n - 1), so q = 0 and q = 1 give the minimum and maximum.
    """
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile fraction must be in [0, 1] (got {q})")
    v = valid_values(x, mask)
    if v.size == 0:
        raise DegenerateInputError("quantile of an empty sample")
    return float(np.quantile(v, q, method="linear"))


def plotting_positions(n):
    """Hazen positions (i - 0.5) / n, i = 1..n."""
    return (np.arange(1, n + 1) - 0.5) / n


def normal_probability_plot(x, mask=None):
    """Pairs (theoretical normal quantile, ordered sample value).

    A sample drawn from a normal law lines up on a straight line; heavy upper
    tails bend above it.
    """
    v = np.sort(valid_values(x, mask))
    if v.size < 2:
        raise DegenerateInputError("probability plot needs at least 2 valid samples")
    theo = normal_ppf(plotting_positions(v.size))
    return list(zip(theo.tolist(), v.tolist()))


@dataclass
class BoxSummary:
    bucket: int
    start_minute: int
    count: int
    median: float = float("nan")
    q1: float = float("nan")
    q3: float = float("nan")
    whisker_low: float = float("nan")
    whisker_high: float = float("nan")
    outliers: list = field(default_factory=list)

    @property
    def empty(self):
        return self.count == 0

    @property
    def iqr(self):
        return self.q3 - self.q1

    def to_dict(self):
        d = asdict(self)
        d["empty"] = self.empty
        return d


def box_summary(values, bucket=0, start_minute=0, whisker=1.5) -> BoxSummary:
    """Five-number summary with Tukey fences at ``whisker`` times the IQR."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return BoxSummary(bucket, start_minute, 0)
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    lo_fence = q1 - whisker * (q3 - q1)
    hi_fence = q3 + whisker * (q3 - q1)
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    outliers = v[(v < lo_fence) | (v > hi_fence)]
    return BoxSummary(
        bucket, start_minute, int(v.size), float(med), float(q1), float(q3),
        float(inside.min()), float(inside.max()), outliers.tolist(),
    )


def hourly_summary(series, field="load", resolution=60, whisker=1.5):
    """Box statistics of prices or loads per time-of-day bucket.

    ``resolution`` is the bucket width in minutes: 60 gives 24 hourly buckets,
    15 gives the 96 quarter-hour buckets. Buckets with no valid samples are
    returned with ``count == 0``.
    """
    if field not in ("price", "load"):
        raise ValueError("field must be 'price' or 'load'")
    if 1440 % resolution or resolution % series.interval:
        raise ValueError("resolution must divide a day and be a multiple of the sampling interval")
    values = series.prices if field == "price" else series.loads
    bucket = series.minutes_of_day() // resolution
    out = []
    for b in range(1440 // resolution):
        sel = series.mask & (bucket == b)
        out.append(box_summary(values[sel], b, b * resolution, whisker))
    return out


def median_by_time_of_day(series, field="price"):
    """Median per sampling slot of the day (96 values on a 15-minute grid)."""
    return [b.median for b in hourly_summary(series, field, resolution=series.interval)]
