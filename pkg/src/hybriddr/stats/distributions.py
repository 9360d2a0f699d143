"""Tail probabilities for the t and F distributions.

Both reduce to the regularized incomplete beta function, evaluated here with
the modified Lentz continued fraction. Normal quantiles come from scipy.
"""

import math

from scipy.special import ndtri

from ..exceptions import DomainError

_TINY = 1e-300
_EPS = 1e-16
_MAX_ITER = 100_000


def _betacf(a, b, x):
    # continued fraction for I_x(a, b), valid and fast for x < (a + 1) / (a + b + 2)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _log_front(a, b, x):
    return (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )


def betainc(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0`` and ``0 <= x <= 1``."""
    if not (a > 0 and b > 0):
        raise DomainError(f"betainc requires a, b > 0 (got {a}, {b})")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"betainc requires 0 <= x <= 1 (got {x})")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(_log_front(a, b, x)) * _betacf(a, b, x) / a
    return 1.0 - math.exp(_log_front(b, a, 1.0 - x)) * _betacf(b, a, 1.0 - x) / b


def betainc_upper(a, b, x):
    """``1 - I_x(a, b)`` computed without cancellation."""
    if x == 0.0:
        return 1.0
    if x == 1.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        return 1.0 - betainc(a, b, x)
    return math.exp(_log_front(b, a, 1.0 - x)) * _betacf(b, a, 1.0 - x) / b


def _check_df(*dfs):
    for df in dfs:
        if not (df > 0) or math.isinf(df):
            raise DomainError(f"degrees of freedom must be positive and finite (got {df})")


def t_tail_p(t, df):
    """Two-sided p-value ``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    _check_df(df)
    t = float(t)
    if not math.isfinite(t):
        raise DomainError(f"t statistic must be finite (got {t})")
    if t == 0.0:
        return 1.0
    # P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    x = df / (df + t * t)
    return min(1.0, betainc(df / 2.0, 0.5, x))


def f_tail_p(f, df1, df2):
    """Upper-tail probability ``P(F >= f)`` for the F(df1, df2) distribution."""
    _check_df(df1, df2)
    f = float(f)
    if not math.isfinite(f) or f < 0:
        raise DomainError(f"F statistic must be finite and nonnegative (got {f})")
    if f == 0.0:
        return 1.0
    x = df2 / (df2 + df1 * f)
    return min(1.0, betainc(df2 / 2.0, df1 / 2.0, x))


def normal_ppf(p):
    """Standard normal quantile function."""
    return ndtri(p)


Z_975 = float(ndtri(0.975))
