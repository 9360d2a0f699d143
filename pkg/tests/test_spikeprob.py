import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybriddr.exceptions import InsufficientDataError
from hybriddr.spikeprob import conditional_spike_prob, parse_price_range, spike_indicator
from hybriddr.synth import PriceProcessSpec, calibrate_quantile, gen_prices, make_rng

from conftest import make_series

DAY = 96


def iid_prices(n, seed, rate=0.05):
    rng = make_rng(seed)
    p = 30 + 5 * rng.random(n)
    p[rng.random(n) < rate] = 500.0
    return p


def clustered_prices(n, seed, starts_per_day=2.0, length=3):
    rng = make_rng(seed)
    p = 30 + 5 * rng.random(n)
    for t in np.flatnonzero(rng.random(n) < starts_per_day / DAY):
        p[t:t + length] = 500.0
    return p


def test_spike_indicator_basics():
    p = np.array([10.0, 200.0, np.nan, 150.0])
    np.testing.assert_array_equal(spike_indicator(p, 144.4), [False, True, False, True])
    assert not spike_indicator(p, 1e6).any()
    s = make_series(np.r_[np.full(50, 20.0), 900.0, np.full(50, 20.0)])
    assert spike_indicator(s, 144.4).sum() == 1
    m = np.ones(4, bool)
    m[1] = False
    np.testing.assert_array_equal(spike_indicator(p, 144.4, m), [False, False, False, True])


def test_calibrated_series_spikes_five_percent():
    p = calibrate_quantile(gen_prices(PriceProcessSpec(), DAY * 273, 3))
    frac = spike_indicator(p, 144.4187).mean()
    assert abs(frac - 0.05) < 0.001


def test_parse_price_range():
    p = np.arange(1.0, 101.0)
    lo, hi = parse_price_range("q90:q100", p)
    assert lo == pytest.approx(np.quantile(p, 0.9)) and hi == 100.0
    assert parse_price_range("50:inf") == (50.0, np.inf)
    with pytest.raises(ValueError):
        parse_price_range("9:1")
    with pytest.raises(ValueError):
        parse_price_range("q10:q20")


def test_iid_process_within_band():
    s = make_series(iid_prices(DAY * 400, 1))
    prof = conditional_spike_prob(s, threshold=100.0)
    dev = np.abs(prof.probabilities - prof.baseline)
    assert np.all(dev <= prof.band(0.95))


def test_clusters_elevate_short_lags():
    s = make_series(clustered_prices(DAY * 400, 2))
    prof = conditional_spike_prob(s, threshold=100.0)
    z = prof.excess()
    assert z[0] > 3 and z[1] > 3
    assert prof.probabilities[0] > prof.probabilities[1] > prof.probabilities[2]
    assert np.all(np.abs(z[4:]) < 4)


def test_no_spikes_gives_zero():
    s = make_series(np.full(DAY * 20, 30.0))
    prof = conditional_spike_prob(s, price_range=(0.0, 50.0), threshold=100.0)
    np.testing.assert_array_equal(prof.probabilities, 0.0)
    assert prof.baseline == 0.0


def test_counts_rederive_probabilities():
    s = make_series(clustered_prices(DAY * 60, 4))
    prof = conditional_spike_prob(s, price_range=(0.0, np.inf), threshold=100.0)
    p = s.masked_prices()
    tod = s.minutes_of_day()
    cond = np.flatnonzero((tod >= 540) & (tod < 900))
    for k, c, h in zip(prof.delays, prof.counts, prof.hits):
        t = cond[cond + k < len(p)]
        assert c == t.size and h == np.sum(p[t + k] > 100.0)
    np.testing.assert_array_equal(prof.probabilities, prof.hits / prof.counts)
    assert np.all((prof.probabilities >= 0) & (prof.probabilities <= 1))


def test_empty_lag_marked():
    p = np.full(DAY, 30.0)
    prof = conditional_spike_prob(make_series(p), price_range=(0.0, 50.0), window=("14:45", "15:00"),
                                  delays=[1, 40], threshold=100.0)
    np.testing.assert_array_equal(prof.counts, [1, 0])
    assert prof.probabilities[0] == 0.0 and np.isnan(prof.probabilities[1])
    assert prof.to_dict()["lags"][1]["conditional"] is None
    with pytest.raises(InsufficientDataError):
        conditional_spike_prob(make_series(p, mask=np.zeros(DAY, bool)))


@given(st.integers(0, 80), st.integers(1, 16), st.integers(1, 16), st.integers(0, 10_000))
def test_widening_window_never_reduces_counts(a, w, extra, seed):
    s = make_series(clustered_prices(DAY * 5, seed))
    lo = 15 * a
    hi = min(lo + 15 * w, 1440)
    wider = min(hi + 15 * extra, 1440)
    clock = lambda m: f"{m // 60:02d}:{m % 60:02d}"
    narrow = conditional_spike_prob(s, (0.0, np.inf), (clock(lo), clock(hi)), threshold=100.0)
    wide = conditional_spike_prob(s, (0.0, np.inf), (clock(lo), clock(wider)), threshold=100.0)
    assert np.all(wide.counts >= narrow.counts)


def test_memoryless_gap_shrinks_with_size():
    def gap(days):
        vals = []
        for seed in range(10):
            prof = conditional_spike_prob(make_series(iid_prices(DAY * days, seed)), threshold=100.0)
            vals.append(np.max(np.abs(prof.probabilities - prof.baseline)))
        return np.median(vals)

    assert gap(800) < gap(50)
