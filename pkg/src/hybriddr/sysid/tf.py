"""Rational transfer functions in the backshift variable and their stability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arx import ArxModel


@dataclass(frozen=True)
class TransferFunction:
    """``num(z^-1) / den(z^-1)``; index i of each tuple multiplies z^-i, ``den[0] == 1``."""

    num: tuple
    den: tuple

    def __post_init__(self):
        num = tuple(float(v) for v in self.num) or (0.0,)
        den = tuple(float(v) for v in self.den)
        if not den or den[0] != 1.0:
            raise ValueError("denominator must have leading coefficient 1")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def rounded(self, decimals=4):
        return TransferFunction(tuple(round(v, decimals) for v in self.num),
                                tuple(round(v, decimals) for v in self.den))

    def poles(self):
        """Roots of ``z^m den(z^-1)``, via companion-matrix eigenvalues."""
        den = np.trim_zeros(np.asarray(self.den), "b")
        m = den.size - 1
        if m < 1:
            return np.empty(0, dtype=complex)
        companion = np.zeros((m, m))
        companion[0, :] = -den[1:]
        companion[1:, :-1] = np.eye(m - 1)
        return np.linalg.eigvals(companion)

    def dc_gain(self):
        return sum(self.num) / sum(self.den)

    def to_arx_model(self, intercept=0.0, **kw) -> ArxModel:
        """Inverse of ``to_transfer_function`` (zero coefficients are dropped)."""
        ar = [(i, -c) for i, c in enumerate(self.den) if i > 0 and c != 0.0]
        x = [(i, c) for i, c in enumerate(self.num) if i > 0 and c != 0.0]
        if self.num[0] != 0.0:
            raise ValueError("a direct-feedthrough term has no ARX counterpart")
        return ArxModel(tuple(i for i, _ in ar), tuple(c for _, c in ar),
                        tuple(i for i, _ in x), tuple(c for _, c in x), intercept, **kw)

    def __str__(self):
        def poly(c):
            terms = [f"{v:+g}" + (f" z^-{i}" if i else "") for i, v in enumerate(c) if v != 0.0]
            return " ".join(terms).lstrip("+") or "0"
        return f"({poly(self.num)}) / ({poly(self.den)})"


def to_transfer_function(model: ArxModel) -> TransferFunction:
    """Numerator from the input coefficients, denominator ``1 - sum a_i z^-i``."""
    num = np.zeros(max(model.x_lags, default=0) + 1)
    for lag, b in zip(model.x_lags, model.x_coeffs):
        num[lag] = b
    den = np.zeros(max(model.ar_lags, default=0) + 1)
    den[0] = 1.0
    for lag, a in zip(model.ar_lags, model.ar_coeffs):
        den[lag] = -a
    return TransferFunction(tuple(num), tuple(den))


@dataclass(frozen=True)
class Stability:
    poles: np.ndarray
    moduli: np.ndarray
    stable: bool
    marginal: bool

    def to_dict(self):
        return {"moduli": self.moduli.tolist(), "stable": self.stable, "marginal": self.marginal}


def stability(tf: TransferFunction | ArxModel, tol=1e-9) -> Stability:
    """Stable iff every pole lies strictly inside the unit circle.

    Poles within ``tol`` of the circle are flagged marginal (and not stable).
    """
    if isinstance(tf, ArxModel):
        tf = to_transfer_function(tf)
    poles = tf.poles()
    moduli = np.abs(poles)
    marginal = bool(np.any(np.abs(moduli - 1.0) <= tol))
    stable = bool(np.all(moduli < 1.0 - tol))
    return Stability(poles, moduli, stable, marginal)
