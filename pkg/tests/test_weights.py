import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wbmo.families import Dyadic, Full1D
from wbmo.grid import DyadicGrid, GridFunction
from wbmo.weights import (
    Power, Scaled, Tabulated, Weight, a1_characteristic, ainfty_characteristic, ap_characteristic,
    b_omega_characteristic, check_embedding, check_modulus, dini_integral, dini_norm, embedding_constant,
    identity_weight, make_weight, power_weight, step_weight, stock_weights,
)


# oracles ---------------------------------------------------------------------


def brute_a1(w):
    g = w.grid
    best = 0.0
    for q in g.cubes():
        v = w.values[g.cube_box(q).slices]
        best = max(best, v.mean() / v.min())
    return best


def brute_ap(w, p):
    g = w.grid
    best = 0.0
    for q in g.cubes():
        v = w.values[g.cube_box(q).slices]
        best = max(best, v.mean() * np.mean(v ** (-1 / (p - 1))) ** (p - 1))
    return best


def brute_ainfty_1d(w):
    g = w.grid
    best = 0.0
    for q in g.cubes():
        v = w.values[g.cube_box(q).slices]
        m = len(v)
        loc = np.zeros(m)
        size = m
        while size >= 1:
            blocks = v.reshape(-1, size).mean(axis=1)
            loc = np.maximum(loc, np.repeat(blocks, size))
            size //= 2
        best = max(best, loc.sum() / v.sum())
    return best


# A1, Ap, Ainf ----------------------------------------------------------------


def test_a1_examples():
    g = DyadicGrid.interval(0, 1, 1)
    assert a1_characteristic(identity_weight(g)) == 1.0
    assert a1_characteristic(Weight(g, np.array([2.0, 1.0]))) == 1.5
    vals = [a1_characteristic(DyadicGrid.interval(0, 1, d).sample(lambda x: x ** -0.5)) for d in (6, 8, 10)]
    assert all(math.isfinite(v) for v in vals) and vals[0] <= vals[1] <= vals[2]


def test_ap_examples():
    g = DyadicGrid.interval(-1, 1, 6)
    for p in (1.5, 2.0, 3.0):
        assert math.isclose(ap_characteristic(identity_weight(g), p), 1.0, rel_tol=1e-14)
    a10 = ap_characteristic(power_weight(DyadicGrid.interval(-1, 1, 10), 0.5), 2.0)
    a12 = ap_characteristic(power_weight(DyadicGrid.interval(-1, 1, 12), 0.5), 2.0)
    assert round(a10, 2) == round(a12, 2) or abs(a10 - a12) < 5e-3


def test_ainfty_examples():
    g = DyadicGrid.interval(0, 1, 4)
    assert math.isclose(ainfty_characteristic(identity_weight(g)), 1.0, rel_tol=1e-14)
    w = step_weight(g, 3.0, 1.0)
    val = ainfty_characteristic(w)
    assert 1.0 <= val <= a1_characteristic(w) * (1 + 1e-12)


def test_stock_class_nesting():
    g = DyadicGrid.interval(-1, 1, 8)
    for w in stock_weights(g):
        a1 = a1_characteristic(w)
        assert ainfty_characteristic(w) <= a1 * (1 + 1e-12), w.label
        for p in (1.5, 2.0, 4.0):
            assert ap_characteristic(w, p) <= a1 * (1 + 1e-12), w.label


@given(st.integers(0, 2**31 - 1), st.sampled_from([1.5, 2.0, 3.0]))
def test_characteristics_match_brute_force(seed, p):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(0, 1, 5)
    w = Weight(g, rng.uniform(0.1, 3.0, g.n))
    assert math.isclose(a1_characteristic(w), brute_a1(w), rel_tol=1e-12)
    assert math.isclose(ap_characteristic(w, p), brute_ap(w, p), rel_tol=1e-12)
    assert math.isclose(ainfty_characteristic(w), brute_ainfty_1d(w), rel_tol=1e-12)


def test_a1_forms_agree_on_stock_weights():
    t0 = time.time()
    for dim, depth in ((1, 10), (2, 5)):
        g = DyadicGrid((-1.0,) * dim, 2.0, dim, depth)
        for w in stock_weights(g):
            s = w.inverse()
            sup = a1_characteristic(s, form="sup")
            mx = a1_characteristic(s, form="maximal")
            assert abs(sup - mx) <= 1e-12 * max(1.0, sup), w.label
    assert time.time() - t0 < 5.0


@given(st.integers(0, 2**31 - 1), st.floats(1e-3, 1e3))
def test_rescaling_invariance(seed, c):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(0, 1, 5)
    w = Weight(g, rng.uniform(0.2, 5.0, g.n))
    for fn in (a1_characteristic, ainfty_characteristic, lambda u: ap_characteristic(u, 2.0)):
        assert math.isclose(fn(w), fn(w.scaled(c)), rel_tol=1e-12)


def test_dilation_covariance(rng):
    v = rng.uniform(0.5, 2.0, 64)
    a = Weight(DyadicGrid.interval(0, 1, 6), v)
    b = Weight(DyadicGrid.interval(0, 2, 6), v)
    for fn in (a1_characteristic, ainfty_characteristic, lambda u: ap_characteristic(u, 3.0)):
        assert math.isclose(fn(a), fn(b), rel_tol=1e-13)


def test_monotone_in_depth():
    prev = None
    for d in (4, 6, 8, 10):
        w = power_weight(DyadicGrid.interval(-1, 1, d), -0.5)
        cur = (a1_characteristic(w), ap_characteristic(w, 2.0), ainfty_characteristic(w))
        if prev:
            assert all(c >= p_ * (1 - 1e-12) for c, p_ in zip(cur, prev))
        prev = cur


def test_full_family_dominates_dyadic(rng):
    g = DyadicGrid.interval(0, 1, 6)
    w = Weight(g, rng.uniform(0.2, 4.0, g.n))
    assert a1_characteristic(w, Full1D()) >= a1_characteristic(w, Dyadic())
    assert ainfty_characteristic(w, Full1D()) >= 1.0


def test_make_weight_configs():
    g = DyadicGrid.interval(-1, 1, 4)
    assert make_weight(g, {"kind": "identity"}).label == "identity"
    w = make_weight(g, {"kind": "step", "breaks": [0.0], "values": [2.0, 1.0]})
    assert list(np.unique(w.values)) == [1.0, 2.0]
    with pytest.raises(ValueError):
        make_weight(g, {"kind": "nonsense"})
    with pytest.raises(ValueError):
        Weight(g, np.zeros(g.n))


# moduli ----------------------------------------------------------------------


def test_dini_norms():
    assert dini_norm(Power(1.0)) == 1.0
    for a in (0.25, 0.5, 0.9):
        assert math.isclose(dini_norm(Power(a)), 1 / a)
    ts = tuple(np.linspace(0.01, 1.0, 100))
    tab = Tabulated(ts, ts)
    assert abs(dini_norm(tab) - 1.0) < 1e-6
    assert dini_norm(Scaled(2.0, Power(1.0))) == 2.0
    assert math.isinf(dini_integral(Power(1.0), 1.0))
    assert math.isclose(dini_integral(Power(1.0), 0.5), 2.0)


def test_modulus_checks():
    assert check_modulus(Power(0.5)) == []
    assert "not increasing" in check_modulus(Tabulated((0.5, 1.0), (1.0, 0.5)))
    assert "not subadditive" in check_modulus(lambda t: np.asarray(t, float) ** 2)


# B(Omega) --------------------------------------------------------------------


def test_b_omega_identity_weight_below_annulus_bound():
    g = DyadicGrid.interval(-8, 8, 9)
    r = b_omega_characteristic(identity_weight(g), Power(1.0))
    assert 0 < r.value <= r.annulus_bound
    assert r.value <= r.upper < 4.0 + 1e-9  # two half-lines of int ell/r^2 outside a cube


def test_embedding_chain_and_divergent_skip():
    g = DyadicGrid.interval(-1, 1, 8)
    r = check_embedding(power_weight(g, 0.25), Power(1.0), 1.5)
    assert r.status == "pass" and r.lhs <= r.rhs
    s = check_embedding(identity_weight(g), Power(1.0), 2.0)
    assert s.status == "skipped"
    assert embedding_constant(1, 1.0) == pytest.approx(4 * 3 / math.log(2))
    assert embedding_constant(2, 1.5) == pytest.approx(16 * 4 * 4 / math.log(2))
