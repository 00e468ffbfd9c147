import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wbmo.grid import (
    Cube, DyadicGrid, GridError, GridFunction, LatticeBox, average, enumerate_boxes_1d, weight_mass,
)


def test_level_cubes_tile_the_root():
    for dim in (1, 2):
        g = DyadicGrid((0.0,) * dim, 1.0, dim, 4)
        for k in range(5):
            cubes = list(g.cubes(k))
            assert len(cubes) == 2 ** (k * dim)
            cover = np.zeros(g.shape, dtype=int)
            for q in cubes:
                cover[g.cube_box(q).slices] += 1
            assert np.all(cover == 1)


def test_cube_geometry():
    g = DyadicGrid((-1.0, 2.0), 4.0, 2, 5)
    q = Cube(2, (1, 3))
    assert g.cube_side(q) == 1.0
    assert g.cube_volume(q) == 1.0
    assert np.allclose(g.cube_center(q), [-1 + 1.5, 2 + 3.5])
    kids = q.children()
    assert len(kids) == 4 and all(k.parent() == q for k in kids)
    assert all(q.contains(k) for k in kids)


def test_dyadic_cubes_nested_or_disjoint():
    g = DyadicGrid.interval(0, 1, 4)
    cubes = list(g.cubes())
    for a in cubes:
        for b in cubes:
            ba, bb = g.cube_box(a), g.cube_box(b)
            overlap = max(ba.lo[0], bb.lo[0]) < min(ba.hi[0], bb.hi[0])
            assert (not overlap) or a.contains(b) or b.contains(a)


def test_invalid_grids_and_cubes():
    with pytest.raises(GridError):
        DyadicGrid((0.0,), 1.0, 3, 2)
    with pytest.raises(GridError):
        DyadicGrid((0.0,), -1.0, 1, 2)
    g = DyadicGrid.interval(0, 1, 3)
    with pytest.raises(GridError):
        g.check_cube(Cube(4, (0,)))
    with pytest.raises(GridError):
        g.check_cube(Cube(1, (2,)))
    with pytest.raises(GridError):
        GridFunction(g, np.array([np.nan] * 8))


def test_average_examples():
    g = DyadicGrid.interval(0, 1, 1)
    one = g.constant(1.0)
    half = g.indicator([0.0], [0.5])
    assert average(one, g.root) == 1.0
    assert average(half, g.root) == 0.5
    assert math.isclose(average(half, g.root, 2.0), math.sqrt(0.5), rel_tol=1e-15)
    assert average(half, g.root, math.inf) == 1.0


def test_weight_mass_examples():
    g = DyadicGrid.interval(0, 1, 10)
    assert math.isclose(weight_mass(g.constant(1.0), g.box_from_coords([0.0], [0.25])), 0.25, rel_tol=1e-15)
    w = g.sample(lambda x: x ** -0.5)
    x = (np.arange(1024) + 0.5) / 1024
    assert math.isclose(weight_mass(w, g.root), math.fsum(x ** -0.5 / 1024), rel_tol=1e-13)
    g1 = DyadicGrid.interval(0, 1, 1)
    assert weight_mass(GridFunction(g1, np.array([2.0, 0.0])), Cube(1, (1,))) == 0.0


def test_enumerate_boxes_counts():
    g = DyadicGrid.interval(0, 1, 1)
    boxes = sorted((b.lo, b.hi) for b in enumerate_boxes_1d(g))
    assert boxes == [((0,), (1,)), ((0,), (2,)), ((1,), (2,))]
    assert sum(1 for _ in enumerate_boxes_1d(DyadicGrid.interval(0, 1, 2))) == 10
    assert sum(1 for _ in enumerate_boxes_1d(DyadicGrid.interval(0, 1, 10))) == 524800


def test_json_round_trip(rng):
    g = DyadicGrid((0.0, 0.0), 2.0, 2, 3)
    f = GridFunction(g, rng.standard_normal(g.shape))
    h = GridFunction.from_json(f.to_json())
    assert h.grid == g and np.array_equal(h.values, f.values)


def test_integral_is_order_stable(rng):
    g = DyadicGrid.interval(0, 1, 12)
    v = rng.standard_normal(g.n) * 10.0 ** rng.integers(-8, 8, g.n)
    a = GridFunction(g, v).integral()
    b = GridFunction(g, v[::-1].copy()).integral()
    assert a == b


@given(st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_partition_additivity(depth, seed):
    g = DyadicGrid.interval(0, 1, depth)
    f = GridFunction(g, np.random.default_rng(seed).standard_normal(g.n))
    for q in g.cubes():
        if q.level == depth:
            continue
        kids = math.fsum(g.cube_volume(c) * average(f, c) for c in q.children())
        assert math.isclose(kids, g.cube_volume(q) * average(f, q), rel_tol=1e-13, abs_tol=1e-13)


@given(st.integers(0, 2**31 - 1), st.floats(0.5, 4.0), st.floats(0.0, 3.0))
def test_holder_monotonicity(seed, q1, extra):
    rng = np.random.default_rng(seed)
    g = DyadicGrid.interval(0, 1, 6)
    f = GridFunction(g, rng.standard_normal(g.n))
    a, b = sorted(rng.integers(0, g.n + 1, 2))
    b = max(b, a + 1)
    box = LatticeBox((int(a),), (int(b),))
    lo, hi = average(f, box, q1), average(f, box, q1 + extra)
    assert lo <= hi * (1 + 1e-12)
    assert average(f, box, math.inf) == np.abs(f.values[a:b]).max()
