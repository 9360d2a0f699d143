"""Ordinary least squares with classical inference, solved by pivoted QR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..exceptions import InsufficientDataError, SingularDesignError
from ..stats.distributions import f_tail_p, t_tail_p

RANK_TOL = 1e-10


@dataclass(frozen=True)
class OlsFit:
    names: tuple
    estimates: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    rmse: float
    r2: float
    f_stat: float
    f_p_value: float
    n_obs: int
    df_resid: int
    residuals: np.ndarray
    fitted: np.ndarray
    has_const: bool

    @property
    def ssr(self):
        return float(self.residuals @ self.residuals)

    def coef(self, name):
        return float(self.estimates[self.names.index(name)])

    def table(self):
        """Rows of (name, estimate, SE, tStat, pValue)."""
        return [
            (n, float(e), float(s), float(t), float(p))
            for n, e, s, t, p in zip(self.names, self.estimates, self.se, self.t, self.p)
        ]

    def to_dict(self):
        return {
            "coefficients": [
                {"name": n, "estimate": e, "se": s, "tStat": t, "pValue": p}
                for n, e, s, t, p in self.table()
            ],
            "rmse": self.rmse,
            "r2": self.r2,
            "f_stat": self.f_stat,
            "f_p_value": self.f_p_value,
            "n_obs": self.n_obs,
            "df_resid": self.df_resid,
        }


def _is_const(col):
    return col.size > 0 and np.all(col == col[0]) and col[0] != 0


def ols(X, y, names=None) -> OlsFit:
    """Least-squares fit of ``y`` on the columns of ``X``.

    Include a column of ones in ``X`` to fit an intercept; the F statistic is
    then the test against the intercept-only model (otherwise against zero).

    Raises
    ------
    SingularDesignError
        If the design is rank deficient; ``err.columns`` lists the columns
        that are linear combinations of the others.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if names is None:
        names = tuple(f"x{i}" for i in range(k))
    names = tuple(names)
    if len(names) != k:
        raise ValueError("one name per design column is required")
    if y.size != n:
        raise ValueError("response length must match design rows")
    if n < k + 1:
        raise InsufficientDataError(f"need at least {k + 1} rows for {k} coefficients (got {n})")

    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size else 0.0
    rank = int(np.sum(diag > RANK_TOL * max(scale, np.finfo(float).tiny)))
    if rank < k or scale == 0.0:
        raise SingularDesignError([names[j] for j in piv[rank:]])

    beta_p = scipy.linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(k)
    beta[piv] = beta_p
    fitted = X @ beta
    resid = y - fitted
    ssr = float(resid @ resid)
    dfr = n - k
    s2 = ssr / dfr
    Rinv = scipy.linalg.solve_triangular(R, np.eye(k))
    var_p = np.sum(Rinv * Rinv, axis=1) * s2
    se = np.empty(k)
    se[piv] = np.sqrt(var_p)

    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p = np.array([t_tail_p(ti, dfr) if np.isfinite(ti) else 0.0 for ti in t])

    has_const = any(_is_const(X[:, j]) for j in range(k))
    ybar = y.mean() if has_const else 0.0
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else (1.0 if ssr == 0 else 0.0)
    r2 = min(max(r2, 0.0), 1.0)
    df_model = k - 1 if has_const else k
    ss_model = float(np.sum((y - ybar) ** 2)) - ssr
    if df_model < 1:
        f_stat, f_p = float("nan"), float("nan")
    elif ssr == 0.0:
        f_stat, f_p = float("inf"), 0.0
    else:
        f_stat = (ss_model / df_model) / s2
        f_p = f_tail_p(max(f_stat, 0.0), df_model, dfr)
    return OlsFit(names, beta, se, t, p, float(np.sqrt(s2)), float(r2), float(f_stat), float(f_p),
                  n, dfr, resid, fitted, has_const)

