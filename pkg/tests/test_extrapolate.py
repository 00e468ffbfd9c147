import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wbmo.extrapolate import (
    ContractError, ExtrapolationConfig, InsufficientBound, LebesgueSpace, associate_norm, associate_probe,
    certified_rdf, chain_json, check_rdf, estimate_maximal_norm, extrapolation_demo, fefferman_stein_probe,
    pairing, probe_bank, rubio_de_francia, space_norm, sparse_phi,
)
from wbmo.grid import DyadicGrid, GridFunction
from wbmo.maximal import maximal
from wbmo.sparse import shrinking_dyadic_family, sparse_apply
from wbmo.weights import a1_characteristic, identity_weight, power_weight


@pytest.fixture
def g8():
    return DyadicGrid.interval(0, 1, 8)


def test_space_norm_examples(g8):
    X = LebesgueSpace.unweighted(g8, 2.0)
    assert math.isclose(space_norm(g8.constant(1.0), X), 1.0, rel_tol=1e-15)
    assert math.isclose(associate_norm(g8.constant(1.0), X), 1.0, rel_tol=1e-15)
    with pytest.raises(ContractError):
        LebesgueSpace(1.0, identity_weight(g8))
    with pytest.raises(ContractError):
        LebesgueSpace(math.inf, identity_weight(g8))


def test_associate_space_of_weighted_instance(g8):
    X = LebesgueSpace(1.5, power_weight(g8, 0.25))
    Y = X.associate()
    assert math.isclose(Y.p, 3.0)
    assert np.allclose(Y.v.values, X.v.values ** -2.0)


@given(st.integers(0, 2**31 - 1), st.sampled_from([1.5, 2.0, 3.0]))
def test_holder_pairing_and_probe(seed, p):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(0, 1, 6)
    X = LebesgueSpace(p, GridFunction(g, rng.uniform(0.2, 5.0, g.n)))
    f = GridFunction(g, rng.standard_normal(g.n))
    h = GridFunction(g, rng.standard_normal(g.n))
    closed = associate_norm(h, X)
    assert pairing(f, h) <= space_norm(f, X) * closed * (1 + 1e-12)
    probe = associate_probe(h, X, probe_bank(g, rng))
    assert probe <= closed * (1 + 1e-10)
    assert probe >= closed * (1 - 1e-10)  # the bank holds the extremal function


def test_norming_function(g8, rng):
    X = LebesgueSpace(3.0, power_weight(g8, -0.25))
    h = GridFunction(g8, rng.standard_normal(g8.n))
    gn = X.norming(h)
    assert math.isclose(associate_norm(gn, X), 1.0, rel_tol=1e-12)
    assert math.isclose(float(np.sum(h.values * gn.values)) * g8.h, X.norm(h), rel_tol=1e-12)


def test_maximal_bound_examples(g8):
    X = LebesgueSpace.unweighted(g8, 2.0)
    assert estimate_maximal_norm(X).bound >= 1.0
    f = g8.indicator([0.0], [2.0**-8])
    # brute force: the dyadic maximal function of 1_[0,h) is 2^-k on the k-th shell
    brute = np.zeros(g8.n)
    for q in g8.cubes():
        sl = g8.cube_box(q).slices
        brute[sl] = np.maximum(brute[sl], f.values[sl].mean())
    ratio = X.norm(brute) / X.norm(f)
    assert math.isclose(X.norm(maximal(f)) / X.norm(f), ratio, rel_tol=1e-13)
    mb = estimate_maximal_norm(X, f=f)
    assert mb.bound >= ratio


def test_rdf_constant_fixed_point(g8):
    X = LebesgueSpace.unweighted(g8, 2.0)
    B = 2.0
    res = rubio_de_francia(g8.constant(1.0), B, 40, X=X)
    expected = sum((1 / (2 * B)) ** k for k in range(41))
    assert np.allclose(res.majorant.values, expected, rtol=1e-15)
    assert a1_characteristic(res.majorant) == pytest.approx(1.0, rel=1e-14)


def test_rdf_indicator_postconditions(g8):
    X = LebesgueSpace.unweighted(g8, 2.0)
    f = GridFunction(g8, g8.indicator([0.0], [2.0**-4]).values)
    res = certified_rdf(f, X, 40)
    rows = check_rdf(res, f, X, tol=1e-10)
    assert all(r.status == "pass" for r in rows), rows
    assert rows[-1].lhs <= rows[-1].rhs


def test_rdf_contract_errors(g8):
    X = LebesgueSpace.unweighted(g8, 2.0)
    with pytest.raises(ContractError):
        rubio_de_francia(g8.constant(0.0), 2.0)
    with pytest.raises(ContractError):
        rubio_de_francia(GridFunction(g8, -np.ones(g8.n)), 2.0)
    f = g8.indicator([0.0], [2.0**-8])
    with pytest.raises(InsufficientBound):
        rubio_de_francia(f, 1.0, 10, X=X)


@given(st.integers(0, 2**31 - 1), st.integers(-4, 4))
def test_rdf_homogeneity(seed, k):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(0, 1, 6)
    f = GridFunction(g, rng.exponential(size=g.n))
    lam = 2.0**k
    a = rubio_de_francia(f, 2.0, 20).majorant.values
    b = rubio_de_francia(GridFunction(g, lam * f.values), 2.0, 20).majorant.values
    assert np.array_equal(b, lam * a)
    c = rubio_de_francia(GridFunction(g, 3.7 * f.values), 2.0, 20).majorant.values
    assert np.allclose(c, 3.7 * a, rtol=1e-13)


def test_fefferman_stein_examples():
    g = DyadicGrid.interval(0, 1, 1)
    X = LebesgueSpace.unweighted(g, 2.0)
    pr = fefferman_stein_probe(X, [g.indicator([0.0], [0.5]), g.constant(1.0)])
    assert math.isclose(pr.c_x, math.sqrt(2), rel_tol=1e-14)
    assert pr.skipped == 1 and pr.ordered
    with pytest.raises(ContractError):
        fefferman_stein_probe(X, [])
    g5 = DyadicGrid.interval(0, 1, 5)
    for p in (1.5, 2.0, 3.0):
        pr = fefferman_stein_probe(LebesgueSpace(p, power_weight(g5, 0.25)), probe_bank(g5))
        assert math.isfinite(pr.c_x) and math.isfinite(pr.c_x_weak) and pr.ordered


def test_demo_zero_input(g8):
    fam = shrinking_dyadic_family(g8)
    X = LebesgueSpace.unweighted(g8, 2.0)
    out = extrapolation_demo(lambda h: sparse_apply(fam, h), X, ExtrapolationConfig(sparse_phi(0.5)), g8.constant(0.0))
    assert out.passed and all(c["value"] == 0 for c in out.chain)


@pytest.mark.parametrize("p,delta", [(2.0, 0.0), (1.5, 0.25)])
def test_demo_chain(g8, p, delta):
    fam = shrinking_dyadic_family(g8)
    v = identity_weight(g8) if delta == 0 else power_weight(g8, delta)
    X = LebesgueSpace(p, v)
    out = extrapolation_demo(
        lambda h: sparse_apply(fam, h), X, ExtrapolationConfig(sparse_phi(0.5)), g8.indicator([0.0], [0.5])
    )
    assert out.passed, [r for r in out.reports if not r.passed]
    doc = chain_json(out, X)
    names = [c["quantity"] for c in doc["chain"]]
    assert "B" in names and "C_X(Tf)" in names
    assert all(c["slack"] is None or c["slack"] >= -1e-9 * max(1, abs(c["bound"])) for c in doc["chain"])


def test_phi_must_increase(g8):
    X = LebesgueSpace.unweighted(g8, 2.0)
    with pytest.raises(ContractError):
        extrapolation_demo(lambda h: h, X, ExtrapolationConfig(lambda t: 1.0 / t), g8.constant(1.0))
