import json

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hybriddr.exceptions import DegenerateInputError, DomainError, InfeasibleDispatchError, NoEquilibriumError
from hybriddr.welfare import (
    LinearCurve,
    MarketScenario,
    VerticalDemand,
    dwl_fixed_price,
    dwl_inertia,
    dwl_series,
    equilibrium,
    load_schedule,
    triangle_area,
)

DEMAND = LinearCurve(100.0, -1.0)
SUPPLY = LinearCurve(0.0, 1.0)
DROPPED = LinearCurve(-20.0, 1.0)
RESTORED = LinearCurve(20.0, 1.0)


def shoelace(result):
    v = result.vertices
    return triangle_area(v["A"], v["B"], v["C"])


def test_equilibria():
    assert equilibrium(DEMAND, SUPPLY) == (50.0, 50.0)
    e = equilibrium(LinearCurve(100.0, -2.0), LinearCurve(0.0, 3.0))
    assert e.p == pytest.approx(20.0) and e.q == pytest.approx(60.0)
    assert equilibrium(VerticalDemand(30.0), SUPPLY) == (30.0, 30.0)


def test_equilibrium_errors():
    # a supply curve parallel to demand has a negative slope, which the sign rules reject
    with pytest.raises(DomainError):
        equilibrium(DEMAND, LinearCurve(0.0, -1.0))
    with pytest.raises(NoEquilibriumError):
        equilibrium(LinearCurve(-10.0, -1.0), SUPPLY)
    with pytest.raises(DomainError):
        equilibrium(LinearCurve(100.0, 1.0), SUPPLY)
    with pytest.raises(DomainError):
        LinearCurve(1.0, 0.0)
    with pytest.raises(InfeasibleDispatchError):
        equilibrium(VerticalDemand(80.0), LinearCurve(0.0, 1.0, capacity=60.0))


def test_fixed_price_hand_geometry():
    r = dwl_fixed_price(DEMAND, SUPPLY, 40.0)
    assert r.dwl == 100.0
    assert r.realized == (60.0, 60.0)
    assert r.vertices["A"] == (60.0, 40.0) and r.vertices["C"] == (50.0, 50.0)
    assert shoelace(r) == pytest.approx(r.dwl, rel=1e-12)
    assert dwl_fixed_price(DEMAND, SUPPLY, 50.0).dwl == 0.0
    with pytest.raises(DegenerateInputError):
        dwl_fixed_price(DEMAND, SUPPLY, 100.0)


@given(st.floats(0.01, 49.0))
def test_fixed_price_symmetry(delta):
    lo = dwl_fixed_price(DEMAND, SUPPLY, 50.0 - delta).dwl
    hi = dwl_fixed_price(DEMAND, SUPPLY, 50.0 + delta).dwl
    assert lo == pytest.approx(hi, rel=1e-12)
    assert lo == pytest.approx(delta**2, rel=1e-12)


def test_fixed_price_continuous_with_minimum_at_equilibrium():
    grid = np.linspace(1.0, 99.0, 981)
    d = np.array([dwl_fixed_price(DEMAND, SUPPLY, p).dwl for p in grid])
    assert np.all(d >= 0)
    assert grid[np.argmin(d)] == pytest.approx(50.0)
    assert np.max(np.abs(np.diff(d))) < 10.0


def test_inertia_drop_and_restore():
    drop = dwl_inertia(DEMAND, SUPPLY, DROPPED, "drop")
    assert drop.case == "drop"
    assert drop.vertices["A"] == (50.0, 50.0)
    assert drop.vertices["B"] == (50.0, 70.0)
    assert drop.vertices["C"] == (40.0, 60.0)
    assert drop.dwl == 100.0 == pytest.approx(shoelace(drop), rel=1e-12)
    restore = dwl_inertia(DEMAND, SUPPLY, RESTORED, "restore")
    assert restore.case == "restore" and restore.dwl == drop.dwl
    same = dwl_inertia(DEMAND, SUPPLY, SUPPLY)
    assert same.dwl == 0.0 and same.case == "none"
    with pytest.raises(ValueError):
        dwl_inertia(DEMAND, SUPPLY, DROPPED, "restore")


def test_inertia_scarcity():
    with pytest.raises(InfeasibleDispatchError):
        dwl_inertia(DEMAND, SUPPLY, LinearCurve(-20.0, 1.0, capacity=45.0))


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(1.0, 49.0))
def test_scaling_axes(a, b, p0):
    base = dwl_fixed_price(DEMAND, SUPPLY, p0).dwl
    scaled = dwl_fixed_price(DEMAND.scaled(a, b), SUPPLY.scaled(a, b), b * p0).dwl
    assert scaled == pytest.approx(a * b * base, rel=1e-9)
    inertia = dwl_inertia(DEMAND.scaled(a, b), SUPPLY.scaled(a, b), DROPPED.scaled(a, b)).dwl
    assert inertia == pytest.approx(a * b * 100.0, rel=1e-9)


def alternating(n):
    return [MarketScenario(DEMAND, SUPPLY if i % 2 == 0 else DROPPED) for i in range(n)]


@given(st.lists(st.tuples(st.floats(60.0, 200.0), st.floats(-3.0, -0.2),
                          st.floats(-20.0, 20.0), st.floats(0.2, 3.0)), min_size=1, max_size=8))
def test_instant_policy_is_zero(curves):
    schedule = [MarketScenario(LinearCurve(a, b), LinearCurve(c, d)) for a, b, c, d in curves]
    for s in schedule:
        e_p = (s.demand.intercept - s.supply.intercept) / (s.supply.slope - s.demand.slope)
        assume(e_p > 0 and s.demand.quantity(e_p) > 0)
    assert dwl_series(schedule, "rtrp-instant").total == 0.0


def test_alternating_schedule_inertia_positive():
    sched = alternating(6)
    inertia = dwl_series(sched, "rtrp-inertia")
    oracle = sum(shoelace(r) for r in inertia.results)
    assert inertia.total > 0
    assert inertia.total == pytest.approx(oracle, rel=1e-12)
    assert inertia.total == 500.0
    assert dwl_series(sched, "rtrp-instant").total == 0.0
    assert dwl_series(sched, "rtrp-inertia", interval_hours=0.25).total == 125.0


def test_constant_schedule_no_loss():
    sched = [MarketScenario(DEMAND, SUPPLY)] * 4
    for policy in ("fixed", "rtrp-instant", "rtrp-inertia"):
        np.testing.assert_array_equal(dwl_series(sched, policy).values, 0.0)


def test_single_interval_matches_op():
    sched = [MarketScenario(DEMAND, SUPPLY, p0=40.0)]
    assert dwl_series(sched, "fixed").results[0] == dwl_fixed_price(DEMAND, SUPPLY, 40.0)
    with pytest.raises(ValueError):
        dwl_series([], "fixed")
    with pytest.raises(ValueError):
        dwl_series(sched, "flat")


def test_carry_when_demand_moves():
    sched = [MarketScenario(DEMAND, SUPPLY), MarketScenario(LinearCurve(120.0, -1.0), SUPPLY)]
    r = dwl_series(sched, "rtrp-inertia").results[1]
    assert r.case == "carry" and r.realized.q == 50.0
    assert r.dwl == pytest.approx(0.5 * 10 * 20)


def test_schedule_file(tmp_path):
    sched = alternating(3)
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"schedule": [s.to_dict() for s in sched]}))
    assert load_schedule(path) == sched
    path.write_text(json.dumps([s.to_dict() for s in sched]))
    assert load_schedule(path) == sched
