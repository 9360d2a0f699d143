"""Deadweight-loss geometry for linear demand and supply curves.

Curves are written as quantity against price, ``Q = intercept + slope * P``.
Demand slopes down, supply slopes up. A consumer that does not react to the
current price is a ``VerticalDemand`` at a fixed quantity.

Every loss is the welfare triangle between the nominal demand curve and the
supply curve, spanning the realized quantity and the efficient quantity.
Its vertices are labeled

* ``A``: nominal demand at the realized quantity,
* ``B``: supply at the realized quantity (the price actually cleared),
* ``C``: the efficient intersection of demand and supply.

Units are $/MWh times MW, i.e. $ per hour of the interval.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import DegenerateInputError, DomainError, InfeasibleDispatchError, NoEquilibriumError

POLICIES = ("fixed", "rtrp-instant", "rtrp-inertia")


class Point(NamedTuple):
    q: float
    p: float


@dataclass(frozen=True)
class LinearCurve:
    """``Q = intercept + slope * P``; ``capacity`` caps the quantity a supply curve can reach."""

    intercept: float
    slope: float
    capacity: float | None = None

    def __post_init__(self):
        if self.slope == 0 or not np.isfinite(self.slope):
            raise DomainError("linear curves need a finite nonzero slope; use VerticalDemand for fixed quantity")

    def quantity(self, price):
        return self.intercept + self.slope * price

    def price_at(self, quantity):
        return (quantity - self.intercept) / self.slope

    def scaled(self, a, b):
        """The curve after mapping quantities by ``a`` and prices by ``b``."""
        cap = None if self.capacity is None else a * self.capacity
        return LinearCurve(a * self.intercept, a * self.slope / b, cap)

    def to_dict(self):
        d = {"intercept": self.intercept, "slope": self.slope}
        if self.capacity is not None:
            d["capacity"] = self.capacity
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["intercept"]), float(d["slope"]),
                   None if d.get("capacity") is None else float(d["capacity"]))


@dataclass(frozen=True)
class VerticalDemand:
    """Demand that stays at ``quantity`` regardless of price."""

    quantity_mw: float

    def quantity(self, price):
        return self.quantity_mw

    def to_dict(self):
        return {"quantity": self.quantity_mw}


def _demand(curve):
    if isinstance(curve, LinearCurve) and curve.slope >= 0:
        raise DomainError("demand slope must be negative")
    return curve


def _supply(curve):
    if not isinstance(curve, LinearCurve) or curve.slope <= 0:
        raise DomainError("supply must be a LinearCurve with positive slope")
    return curve


def _dispatch_price(supply, q):
    if supply.capacity is not None and q > supply.capacity:
        raise InfeasibleDispatchError(
            f"supply capacity {supply.capacity} MW cannot serve a fixed demand of {q} MW")
    return supply.price_at(q)


def equilibrium(demand, supply) -> Point:
    """Market clearing point of the two curves.

    Raises ``NoEquilibriumError`` for parallel curves or an intersection at
    a nonpositive price or quantity.
    """
    supply = _supply(supply)
    demand = _demand(demand)
    if isinstance(demand, VerticalDemand):
        q = demand.quantity_mw
        p = _dispatch_price(supply, q)
    else:
        if demand.slope == supply.slope:
            raise NoEquilibriumError("demand and supply are parallel")
        p = (demand.intercept - supply.intercept) / (supply.slope - demand.slope)
        q = demand.quantity(p)
        if supply.capacity is not None and q > supply.capacity:
            raise InfeasibleDispatchError(f"equilibrium quantity {q} exceeds supply capacity {supply.capacity}")
    if not (p > 0 and q > 0):
        raise NoEquilibriumError(f"curves intersect at nonpositive price or quantity (P={p}, Q={q})")
    return Point(float(q), float(p))


@dataclass(frozen=True)
class DwlResult:
    equilibrium: Point
    realized: Point
    dwl: float
    vertices: dict = field(default_factory=dict)
    case: str = ""

    def to_dict(self):
        return {
            "case": self.case,
            "equilibrium": {"price": self.equilibrium.p, "quantity": self.equilibrium.q},
            "realized": {"price": self.realized.p, "quantity": self.realized.q},
            "dwl": self.dwl,
            "vertices": {k: [v.q, v.p] for k, v in self.vertices.items()},
        }


def triangle_area(a, b, c):
    """Shoelace area of the triangle with vertices given as (q, p) pairs."""
    (x1, y1), (x2, y2), (x3, y3) = a, b, c
    return 0.5 * abs(x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2))


def _loss_at(demand, supply, q_real, case):
    c = equilibrium(demand, supply)
    a = Point(float(q_real), float(demand.price_at(q_real)))
    b = Point(float(q_real), float(_dispatch_price(supply, q_real)))
    dwl = 0.5 * abs(q_real - c.q) * abs(a.p - b.p)
    return DwlResult(c, b, float(dwl), {"A": a, "B": b, "C": c}, case)


def dwl_fixed_price(demand: LinearCurve, supply: LinearCurve, p0) -> DwlResult:
    """Loss when consumers buy at the flat retail price ``p0``.

    The realized quantity is nominal demand at ``p0``; supply must deliver
    it at its own marginal cost.
    """
    demand, supply = _demand(demand), _supply(supply)
    if isinstance(demand, VerticalDemand):
        raise DomainError("fixed-price loss needs a price-responsive demand curve")
    q0 = demand.quantity(p0)
    if q0 <= 0:
        raise DegenerateInputError(f"demand at P0={p0} is {q0} MW; nothing is consumed")
    return _loss_at(demand, supply, q0, "fixed")


def dwl_inertia(demand: LinearCurve, supply_before: LinearCurve, supply_after: LinearCurve,
                mode="auto") -> DwlResult:
    """Loss when demand stays at the pre-shift clearing quantity after a supply shift.

    ``mode`` is ``"drop"`` (supply moves to higher prices), ``"restore"``
    (lower prices) or ``"auto"`` to infer it. A fixed demand the shifted
    supply cannot serve raises ``InfeasibleDispatchError``.
    """
    if mode not in ("auto", "drop", "restore"):
        raise ValueError("mode must be 'auto', 'drop' or 'restore'")
    demand = _demand(demand)
    if isinstance(demand, VerticalDemand):
        raise DomainError("nominal demand must be price responsive")
    a = equilibrium(demand, supply_before)
    after_price = _dispatch_price(_supply(supply_after), a.q)
    shift = "drop" if after_price > a.p else "restore" if after_price < a.p else "none"
    if mode != "auto" and shift not in (mode, "none"):
        raise ValueError(f"supply shift is a {shift}, not a {mode}")
    return _loss_at(demand, supply_after, a.q, shift)


@dataclass(frozen=True)
class MarketScenario:
    demand: LinearCurve
    supply: LinearCurve
    p0: float | None = None
    event: str | None = None

    def validate(self):
        equilibrium(self.demand, self.supply)
        return self

    def to_dict(self):
        d = {"demand": self.demand.to_dict(), "supply": self.supply.to_dict()}
        if self.p0 is not None:
            d["p0"] = self.p0
        if self.event is not None:
            d["event"] = self.event
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(LinearCurve.from_dict(d["demand"]), LinearCurve.from_dict(d["supply"]),
                   None if d.get("p0") is None else float(d["p0"]), d.get("event"))


def load_schedule(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("schedule", [])
    return [MarketScenario.from_dict(d) for d in data]


@dataclass(frozen=True)
class DwlSeries:
    policy: str
    results: list
    interval_hours: float | None = None

    @property
    def values(self):
        return np.array([r.dwl for r in self.results])

    @property
    def total(self):
        t = float(sum(r.dwl for r in self.results))
        return t * self.interval_hours if self.interval_hours is not None else t

    def rows(self):
        return [(i, r.case, r.equilibrium.p, r.equilibrium.q, r.realized.p, r.realized.q, r.dwl)
                for i, r in enumerate(self.results)]

    def to_dict(self):
        return {"policy": self.policy, "interval_hours": self.interval_hours, "total": self.total,
                "intervals": [r.to_dict() for r in self.results]}


def _no_loss(scenario, case):
    c = equilibrium(scenario.demand, scenario.supply)
    return DwlResult(c, c, 0.0, {"A": c, "B": c, "C": c}, case)


def dwl_series(schedule, policy="fixed", interval_hours=None) -> DwlSeries:
    """Per-interval losses of a supply/demand schedule under a retail policy.

    ``fixed``: each interval priced at its ``p0``, defaulting to the first
    interval's clearing price. ``rtrp-instant``: demand follows the current
    price, so no loss. ``rtrp-inertia``: demand holds the previous interval's
    clearing quantity; the first interval has no predecessor and no loss.
    With ``interval_hours`` the total is converted to $.
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    schedule = [s.validate() for s in schedule]
    if not schedule:
        raise ValueError("empty schedule")
    out = []
    if policy == "fixed":
        default_p0 = equilibrium(schedule[0].demand, schedule[0].supply).p
        for s in schedule:
            out.append(dwl_fixed_price(s.demand, s.supply, default_p0 if s.p0 is None else s.p0))
    elif policy == "rtrp-instant":
        out = [_no_loss(s, "instant") for s in schedule]
    else:
        out.append(_no_loss(schedule[0], "none"))
        for prev, cur in zip(schedule, schedule[1:]):
            if prev.demand == cur.demand:
                out.append(dwl_inertia(cur.demand, prev.supply, cur.supply))
            else:
                q_carry = equilibrium(prev.demand, prev.supply).q
                out.append(_loss_at(cur.demand, cur.supply, q_carry, "carry"))
    return DwlSeries(policy, out, interval_hours)
