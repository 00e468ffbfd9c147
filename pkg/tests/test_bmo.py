import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wbmo.bmo import (
    INFINITY, MEAN, ONE, OPTIMAL, WEAK, BmoFlavor, bmo_norm, check_bmoconst, check_inclusions,
    check_msharp_identity, check_weak_strong_equivalence, john_stromberg_report, weak_strong_constant,
)
from wbmo.families import Dyadic, Full1D
from wbmo.grid import DyadicGrid, GridFunction
from wbmo.weights import Weight, identity_weight, step_weight, stock_weights

FLAVORS = [BmoFlavor(i, c) for i in (ONE, INFINITY) for c in (MEAN, OPTIMAL, WEAK)]


def brute_bmo_one_mean(f, w):
    g = f.grid
    best = 0.0
    for q in g.cubes():
        sl = g.cube_box(q).slices
        v = f.values[sl]
        osc = np.abs(v - v.mean()).mean()
        best = max(best, osc * v.size / np.sum(1 / w.values[sl]))
    return best


def test_half_indicator_examples():
    g = DyadicGrid.interval(0, 1, 1)
    f = g.indicator([0.0], [0.5])
    w = identity_weight(g)
    assert bmo_norm(f, w, BmoFlavor(ONE, MEAN)) == 0.5
    assert bmo_norm(f, w, BmoFlavor(INFINITY, MEAN)) == 0.5
    assert bmo_norm(f, w, BmoFlavor(ONE, OPTIMAL)) == 0.5
    assert math.isclose(bmo_norm(f, w, BmoFlavor(INFINITY, WEAK)), 1 / 3, rel_tol=1e-12)
    for fl in FLAVORS:
        assert bmo_norm(g.constant(4.0), w, fl) == 0.0


def test_weak_strong_ratio_of_half_indicator():
    g = DyadicGrid.interval(0, 1, 1)
    r = check_weak_strong_equivalence(g.indicator([0.0], [0.5]), identity_weight(g))
    assert r.status == "pass"
    assert math.isclose(r.lhs / (r.rhs / weak_strong_constant(1)), 1.5, rel_tol=1e-12)
    c = check_weak_strong_equivalence(g.constant(1.0), identity_weight(g))
    assert c.status == "pass" and c.lhs == 0


def test_inclusions_examples(rng):
    g = DyadicGrid.interval(-1, 1, 6)
    for w in stock_weights(g):
        f = GridFunction(g, np.repeat(rng.standard_normal(8), 8))
        assert all(r.status == "pass" for r in check_inclusions(f, w))
    const = check_inclusions(g.constant(2.0), stock_weights(g)[3])
    assert all(r.lhs == 0 and r.status == "pass" for r in const)
    f = GridFunction(g, rng.standard_normal(g.n))
    w = identity_weight(g)
    assert bmo_norm(f, w, BmoFlavor(ONE)) == bmo_norm(f, w, BmoFlavor(INFINITY))


def test_bmoconst_and_msharp_examples(rng):
    g = DyadicGrid.interval(0, 1, 1)
    f = g.indicator([0.0], [0.5])
    assert all(r.status == "pass" for r in check_bmoconst(f, identity_weight(g)))
    ms = check_msharp_identity(f, identity_weight(g))
    assert ms[0].lhs == ms[0].rhs == 0.5
    g6 = DyadicGrid.interval(-1, 1, 6)
    r = check_msharp_identity(GridFunction(g6, rng.standard_normal(g6.n)), step_weight(g6))
    assert all(x.status == "pass" for x in r)


@given(st.integers(0, 2**31 - 1))
def test_bmo_one_matches_brute(seed):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(0, 1, 5)
    f = GridFunction(g, rng.standard_normal(g.n))
    w = Weight(g, rng.uniform(0.3, 3.0, g.n))
    assert math.isclose(bmo_norm(f, w, BmoFlavor(ONE, MEAN)), brute_bmo_one_mean(f, w), rel_tol=1e-12)


@given(st.integers(0, 2**31 - 1), st.floats(-50, 50), st.floats(-8, 8))
def test_shift_invariance_and_homogeneity(seed, c, lam):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(0, 1, 4)
    f = GridFunction(g, rng.standard_normal(g.n))
    w = Weight(g, rng.uniform(0.5, 2.0, g.n))
    for fl in FLAVORS:
        base = bmo_norm(f, w, fl)
        shifted = bmo_norm(GridFunction(g, f.values + c), w, fl)
        assert abs(shifted - base) <= 1e-12 * max(1.0, abs(c)) * 10
        scaled = bmo_norm(GridFunction(g, lam * f.values), w, fl)
        assert abs(scaled - abs(lam) * base) <= 1e-12 * max(1.0, abs(lam) * base) * 10


@given(st.integers(0, 2**31 - 1))
def test_weak_below_strong_and_dyadic_below_full(seed):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(0, 1, 4)
    f = GridFunction(g, rng.standard_normal(g.n))
    w = Weight(g, rng.uniform(0.5, 2.0, g.n))
    for integ in (ONE, INFINITY):
        weak = bmo_norm(f, w, BmoFlavor(integ, WEAK))
        assert weak <= bmo_norm(f, w, BmoFlavor(integ, OPTIMAL)) * (1 + 1e-12)
        for c in (MEAN, WEAK):
            assert bmo_norm(f, w, BmoFlavor(integ, c, Dyadic())) <= bmo_norm(f, w, BmoFlavor(integ, c, Full1D())) * (
                1 + 1e-12
            )


@given(st.integers(0, 2**31 - 1))
def test_random_structure_reports(seed):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(-1, 1, 4)
    w = stock_weights(g)[seed % 8]
    f = GridFunction(g, rng.standard_normal(g.n))
    rows = check_inclusions(f, w) + check_bmoconst(f, w) + check_msharp_identity(f, w)
    assert all(r.status == "pass" for r in rows), [r for r in rows if r.status != "pass"]


def test_weak_strong_on_stock_bank(rng):
    g = DyadicGrid.interval(-1, 1, 5)
    for w in stock_weights(g):
        if math.isinf(w.inverse().values.max()):
            continue
        f = GridFunction(g, rng.standard_normal(g.n))
        assert check_weak_strong_equivalence(f, w).status == "pass"


def test_john_stromberg_band(rng):
    g = DyadicGrid.interval(0, 1, 5)
    band = john_stromberg_report([GridFunction(g, rng.standard_normal(g.n)) for _ in range(4)])
    assert 0 < band["lower"] <= band["upper"]


def test_flavor_validation():
    with pytest.raises(ValueError):
        BmoFlavor("two")
    with pytest.raises(ValueError):
        BmoFlavor(ONE, "median")
