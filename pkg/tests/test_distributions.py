import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from hybriddr.exceptions import DomainError
from hybriddr.stats.distributions import Z_975, betainc, f_tail_p, normal_ppf, t_tail_p

from oracles import f_upper_quad, t_two_sided_quad


def test_t_zero_is_one():
    assert t_tail_p(0.0, 5) == 1.0


def test_t_large_statistic_underflows_to_zero():
    assert t_tail_p(95.075, 7674) == 0.0


def test_t_reference_point():
    p = t_tail_p(4.4886, 7674)
    np.testing.assert_allclose(p, 7.27e-6, rtol=2e-3)
    np.testing.assert_allclose(p, t_two_sided_quad(4.4886, 7674), atol=1e-12)


@pytest.mark.parametrize("t, df", [(0.5, 1), (1.0, 2.5), (2.2, 10), (-3.1, 30), (6.0, 4), (1.96, 1e5)])
def test_t_matches_integration(t, df):
    np.testing.assert_allclose(t_tail_p(t, df), t_two_sided_quad(t, df), atol=1e-10)


@pytest.mark.parametrize("f, d1, d2", [(0.2, 1, 1), (1.0, 3, 12), (3.22, 10, 10351), (25.0, 2, 40), (0.9, 60, 5)])
def test_f_matches_integration(f, d1, d2):
    np.testing.assert_allclose(f_tail_p(f, d1, d2), f_upper_quad(f, d1, d2), atol=1e-10)


def test_f_zero_and_domain_errors():
    assert f_tail_p(0.0, 3, 4) == 1.0
    with pytest.raises(DomainError):
        t_tail_p(np.nan, 3)
    with pytest.raises(DomainError):
        f_tail_p(np.inf, 3, 4)
    with pytest.raises(DomainError):
        t_tail_p(1.0, 0)
    with pytest.raises(DomainError):
        f_tail_p(-1.0, 3, 4)


@given(st.floats(0.05, 50), st.floats(0.05, 50), st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    np.testing.assert_allclose(betainc(a, b, x), special.betainc(a, b, x), atol=1e-12)


@given(st.floats(0, 40), st.floats(0, 40), st.floats(0.5, 500))
def test_t_tail_monotone(t1, t2, df):
    lo, hi = sorted((t1, t2))
    assert t_tail_p(hi, df) <= t_tail_p(lo, df) + 1e-15
    assert 0.0 <= t_tail_p(hi, df) <= 1.0


@given(st.floats(0, 100), st.floats(0, 100), st.integers(1, 50), st.integers(1, 500))
def test_f_tail_monotone(f1, f2, d1, d2):
    lo, hi = sorted((f1, f2))
    assert f_tail_p(hi, d1, d2) <= f_tail_p(lo, d1, d2) + 1e-15


def test_normal_quantiles():
    np.testing.assert_allclose(Z_975, 1.959963984540054, rtol=1e-14)
    np.testing.assert_allclose(normal_ppf(0.5), 0.0, atol=1e-15)
