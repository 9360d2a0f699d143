import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hybriddr import HammersteinARX, RegimeThreshold, TwoStepARX, two_step_arx
from hybriddr.reference_models import PEAK_MODEL
from hybriddr.synth import PlantSpec, PriceProcessSpec, gen_demand, gen_lognormal_prices, gen_series

SPIKE_FREE = PriceProcessSpec(base_std=8.05, base_ar=0.5, spike_rate=0.0)


@pytest.fixture(scope="module")
def moderate():
    s = gen_series(SPIKE_FREE, PlantSpec(floor=None), 5000, 11)
    return s.masked_prices(), s.masked_loads(), s


def test_params_and_clone():
    est = TwoStepARX(ar_lags=(1, 2), x_lags=(3,), method="joint")
    params = est.get_params()
    assert params["ar_lags"] == (1, 2) and params["method"] == "joint"
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(x_lags=(1,))
    assert est.x_lags == (1,)
    assert HammersteinARX().get_params()["transform"] == "log"


def test_fit_matches_functional_api(moderate):
    p, q, s = moderate
    est = TwoStepARX().fit(p, q)
    ref = two_step_arx(s)
    np.testing.assert_array_equal(est.coef_, np.r_[ref.model.ar_coeffs, ref.model.x_coeffs])
    assert est.intercept_ == ref.model.intercept
    np.testing.assert_allclose(est.r2_, ref.r2)
    np.testing.assert_allclose(est.score(p, q), ref.r2, atol=1e-9)


def test_predict_is_one_step(moderate):
    p, q, _ = moderate
    est = TwoStepARX().fit(p[:, None], q)
    pred = est.predict(p, q)
    assert np.all(np.isnan(pred[:5]))
    m = est.model_
    t = 100
    manual = (m.intercept + sum(a * q[t - k] for k, a in zip(m.ar_lags, m.ar_coeffs))
              + sum(b * p[t - k] for k, b in zip(m.x_lags, m.x_coeffs)))
    np.testing.assert_allclose(pred[t], manual, rtol=1e-12)


def test_unfitted_and_shape_errors(moderate):
    p, q, _ = moderate
    with pytest.raises(NotFittedError):
        TwoStepARX().predict(p, q)
    with pytest.raises(ValueError):
        TwoStepARX().fit(np.c_[p, p], q)
    with pytest.raises(ValueError):
        TwoStepARX().fit(p, q[:-1])


def test_hammerstein_stability():
    p = gen_lognormal_prices(8000, 3)
    q = gen_demand(PlantSpec(PEAK_MODEL, floor=None), p, 3)
    est = HammersteinARX().fit(p, q)
    assert est.stability().stable
    assert est.transfer_function().den[0] == 1.0


def test_regime_threshold():
    p = np.arange(1.0, 101.0)
    rt = RegimeThreshold(quantile=0.9).fit(p)
    flags = rt.transform(p)
    assert flags.shape == (100, 1)
    np.testing.assert_array_equal(flags[:, 0], p > rt.threshold_)
    assert RegimeThreshold(threshold=50.0).fit(p).transform(p).sum() == 50
    assert clone(rt).get_params() == {"quantile": 0.9, "threshold": None}
