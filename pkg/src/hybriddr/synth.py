"""Seeded synthetic price and load generators with known ground truth.

Random numbers come from numpy's ``Generator`` on the Philox-4x64
counter-based bit generator, keyed through ``SeedSequence``. Every draw is
made in a fixed order with fixed array sizes, so a given (spec, seed) pair
always yields the same series.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime

import numpy as np
from scipy.signal import lfilter

from .exceptions import SpecValidationError
from .forecast import simulate
from .ingest import AlignedSeries
from .reference_models import MODERATE_MODEL
from .stats.descriptive import quantile
from .sysid.arx import ArxModel
from .sysid.tf import stability

DEFAULT_START = datetime(2008, 1, 1)

# Relative spike intensity per clock hour: rare overnight, concentrated in the afternoon.
AFTERNOON_WEIGHTS = (
    0.2, 0.2, 0.2, 0.2, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9, 1.0, 1.2,
    1.5, 2.0, 2.5, 2.8, 2.8, 2.4, 1.8, 1.2, 0.8, 0.5, 0.3, 0.2,
)


# Price generators append this word to the seed key so that the same user
# seed never reuses the noise stream of ``forecast.simulate``.
PRICE_STREAM = 0x5052


def make_rng(seed):
    """Generator on Philox keyed by ``seed`` (an int or a tuple of ints)."""
    entropy = list(seed) if isinstance(seed, (tuple, list)) else int(seed)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _price_rng(seed):
    key = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return make_rng(key + [PRICE_STREAM])


@dataclass(frozen=True)
class PriceProcessSpec:
    """AR(1) base price plus Pareto-sized spikes lasting one or two intervals.

    A spike starting at slot t adds ``spike_scale * X`` to the base price,
    with X classical-Pareto(``spike_shape``) distributed (X >= 1). Arrivals
    are Bernoulli per slot with mean ``spike_rate`` per day, modulated by the
    hourly ``tod_weights``.
    """

    base_mean: float = 50.0
    base_std: float = 15.0
    base_ar: float = 0.9
    floor: float = 1.0
    spike_rate: float = 3.6
    spike_shape: float = 2.3
    spike_scale: float = 90.0
    p_two_slots: float = 0.5
    tod_weights: tuple = AFTERNOON_WEIGHTS
    interval_mins: int = 15

    def validate(self):
        if not self.base_std > 0:
            raise SpecValidationError("base_std must be positive")
        if not -1 < self.base_ar < 1:
            raise SpecValidationError("base_ar must lie in (-1, 1)")
        if self.spike_rate < 0 or any(w < 0 for w in self.tod_weights):
            raise SpecValidationError("spike rates and weights must be nonnegative")
        if len(self.tod_weights) != 24 or sum(self.tod_weights) <= 0:
            raise SpecValidationError("tod_weights needs 24 nonnegative hourly weights with a positive sum")
        if self.spike_shape <= 0 or self.spike_scale < 0:
            raise SpecValidationError("spike_shape must be positive and spike_scale nonnegative")
        if not 0 <= self.p_two_slots <= 1:
            raise SpecValidationError("p_two_slots must be a probability")
        if self.floor <= 0:
            raise SpecValidationError("floor must be positive so log prices stay defined")
        if 1440 % self.interval_mins:
            raise SpecValidationError("interval must divide a day")
        return self

    def to_dict(self):
        d = asdict(self)
        d["tod_weights"] = list(self.tod_weights)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "tod_weights" in d:
            d["tod_weights"] = tuple(d["tod_weights"])
        return cls(**d)


def _start_minute(start):
    return start.hour * 60 + start.minute


def gen_prices(spec: PriceProcessSpec, n, seed, start=DEFAULT_START) -> np.ndarray:
    spec.validate()
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _price_rng(seed)
    e = rng.standard_normal(n)
    arrive_u = rng.random(n)
    magnitude = spec.spike_scale * (rng.pareto(spec.spike_shape, n) + 1.0)
    two_slots = rng.random(n) < spec.p_two_slots

    phi = spec.base_ar
    innov = spec.base_std * math.sqrt(1.0 - phi * phi) * e
    innov[0] = spec.base_std * e[0]
    dev = lfilter([1.0], [1.0, -phi], innov)
    prices = np.maximum(spec.base_mean + dev, spec.floor)

    per_day = 1440 // spec.interval_mins
    hours = ((_start_minute(start) + spec.interval_mins * np.arange(n)) % 1440) // 60
    w = np.asarray(spec.tod_weights, dtype=float)
    prob = np.minimum(spec.spike_rate / per_day * w[hours] / w.mean(), 1.0)
    starts = np.flatnonzero(arrive_u < prob)
    bump = np.zeros(n)
    for t in starts:
        bump[t] = max(bump[t], magnitude[t])
        if two_slots[t] and t + 1 < n:
            bump[t + 1] = max(bump[t + 1], magnitude[t])
    return prices + bump


def calibrate_quantile(prices, q=0.95, value=144.4187):
    """Rescale positive prices so that their ``q`` quantile equals ``value``.

    Scaling leaves kurtosis and skewness unchanged, so a heavy-tailed
    series keeps its shape while its regime threshold lands on ``value``.
    """
    prices = np.asarray(prices, dtype=float)
    current = quantile(prices, q)
    if not current > 0:
        raise SpecValidationError("the calibration quantile must be positive")
    return prices * (value / current)


def gen_lognormal_prices(n, seed, median=300.0, log_std=0.97) -> np.ndarray:
    """I.i.d. log-normal prices, the input used to exercise log-price models.

    The default spread puts about half of the load variance of the default
    peak plant on the price term.
    """
    rng = _price_rng(seed)
    return median * np.exp(log_std * rng.standard_normal(n))


@dataclass(frozen=True)
class PlantSpec:
    """Load plant: an ARX model plus an optional delayed log-price overlay.

    With ``peak_gain`` nonzero, the load additionally receives
    ``peak_gain * max(0, log P(t - peak_delay) - log surge_threshold)`` and the
    linear price input of ``model`` is capped at ``surge_threshold``.

    ``floor`` clips the recorded loads from below (meters cannot read a
    negative load); the recursion itself runs unclipped. ``None`` disables it.
    """

    model: ArxModel = MODERATE_MODEL
    peak_delay: int = 4
    peak_gain: float = 0.0
    surge_threshold: float = 144.4187
    noise_std: float | None = None
    initial: tuple | None = None
    floor: float | None = 0.0

    @property
    def overlay(self):
        return self.peak_gain != 0.0

    def validate(self):
        if self.model.ar_lags and not stability(self.model).stable:
            raise SpecValidationError("plant model must be stable")
        if self.peak_delay < 1:
            raise SpecValidationError("peak_delay must be >= 1")
        if self.overlay and self.surge_threshold <= 0:
            raise SpecValidationError("surge_threshold must be positive")
        if self.noise_std is not None and self.noise_std < 0:
            raise SpecValidationError("noise_std must be nonnegative")
        return self

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "peak_delay": self.peak_delay,
            "peak_gain": self.peak_gain,
            "surge_threshold": self.surge_threshold,
            "noise_std": self.noise_std,
            "initial": list(self.initial) if self.initial is not None else None,
            "floor": self.floor,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "model" in d:
            d["model"] = ArxModel.from_dict(d["model"])
        if d.get("initial") is not None:
            d["initial"] = tuple(d["initial"])
        return cls(**d)


def overlay_input(prices, delay, threshold):
    """``max(0, log P(t - delay) - log threshold)``, zero for the first ``delay`` samples."""
    p = np.asarray(prices, dtype=float)
    excess = np.zeros(len(p))
    above = np.maximum(np.log(np.maximum(p, 1e-300)) - math.log(threshold), 0.0)
    excess[delay:] = above[:len(p) - delay]
    return excess


def gen_demand(plant: PlantSpec, prices, seed) -> np.ndarray:
    """Loads driven by ``prices``; the first ``max_lag`` samples hold the initial state."""
    plant.validate()
    model = plant.model
    prices = np.asarray(prices, dtype=float)
    m = max(model.max_lag, 1)
    n = len(prices)
    if n <= m:
        raise ValueError(f"need more than {m} prices")
    if plant.initial is not None:
        init = np.asarray(plant.initial, dtype=float)
        if init.size < m:
            raise SpecValidationError(f"initial history needs {m} values")
        init = init[-m:]
    else:
        ref = float(np.median(prices))
        if plant.overlay:
            ref = min(ref, plant.surge_threshold)
        init = np.full(m, model.steady_state(ref))
    drive_prices = prices
    offset = None
    if plant.overlay:
        drive_prices = np.minimum(prices, plant.surge_threshold)
        offset = plant.peak_gain * overlay_input(prices, plant.peak_delay, plant.surge_threshold)[m:]
    tail = simulate(model, init, drive_prices, n - m, plant.noise_std, seed, offset=offset)
    loads = np.r_[init, tail]
    if plant.floor is not None:
        loads = np.maximum(loads, plant.floor)
    return loads


def gen_series(price_spec: PriceProcessSpec, plant: PlantSpec, n, seed, start=DEFAULT_START) -> AlignedSeries:
    """Prices and loads on one grid; prices use stream (seed, 0), loads (seed, 1)."""
    prices = gen_prices(price_spec, n, (seed, 0), start)
    loads = gen_demand(plant, prices, (seed, 1))
    return AlignedSeries(start, prices, loads, interval=price_spec.interval_mins)


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def prices_from_spec(spec, n, seed, start=DEFAULT_START):
    """Prices described by a JSON-style dict.

    ``{"kind": "spiky", ...PriceProcessSpec fields}`` (the default kind) or
    ``{"kind": "lognormal", "median": ..., "log_std": ...}``.
    """
    spec = dict(spec or {})
    kind = spec.pop("kind", "spiky")
    if kind == "spiky":
        return gen_prices(PriceProcessSpec.from_dict(spec), n, seed, start)
    if kind == "lognormal":
        return gen_lognormal_prices(n, seed, **spec)
    raise SpecValidationError(f"unknown price process kind {kind!r}")


def parse_start(text):
    return DEFAULT_START if text is None else datetime.strptime(text, "%Y-%m-%d %H:%M")


def series_from_spec(spec, seed=0, n=None) -> AlignedSeries:
    """Synthetic series from a dict ``{"n", "start", "interval_mins", "prices", "plant"}``.

    Prices use stream (seed, 0) and loads (seed, 1), as in ``gen_series``.
    """
    n = int(spec.get("n", 96 * 365) if n is None else n)
    start = parse_start(spec.get("start"))
    interval = int(spec.get("interval_mins", 15))
    price_spec = dict(spec.get("prices", {}))
    if price_spec.get("kind", "spiky") == "spiky":
        price_spec.setdefault("interval_mins", interval)
    prices = prices_from_spec(price_spec, n, (seed, 0), start)
    plant = PlantSpec.from_dict(spec.get("plant", {}))
    loads = gen_demand(plant, prices, (seed, 1))
    return AlignedSeries(start, prices, loads, interval=interval)
