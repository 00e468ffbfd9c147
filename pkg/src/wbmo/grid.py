"""Dyadic grids, cubes and piecewise-constant functions.

Everything downstream works on functions that are constant on the finest
cells of a dyadic grid, so every integral is a finite sum and identities
between different formulas can be asserted to round-off.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence, Union

import numpy as np


class GridError(ValueError):
    """A cube, box or function does not fit the grid it is used with."""


@dataclass(frozen=True)
class DyadicGrid:
    """Half-open root box ``origin + [0, side)^dim`` refined ``depth`` times."""

    origin: tuple[float, ...]
    side: float
    dim: int = 1
    depth: int = 8

    def __post_init__(self):
        origin = tuple(float(o) for o in np.atleast_1d(self.origin))
        object.__setattr__(self, "origin", origin)
        if self.dim not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {self.dim}")
        if len(origin) != self.dim:
            raise GridError("origin length does not match dimension")
        if not self.side > 0:
            raise GridError("root side must be positive")
        if self.depth < 1:
            raise GridError("depth must be at least 1")

    @classmethod
    def interval(cls, a: float, b: float, depth: int) -> "DyadicGrid":
        return cls((a,), b - a, 1, depth)

    @property
    def n(self) -> int:
        """Number of finest cells along each axis."""
        return 1 << self.depth

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def h(self) -> float:
        return self.side / self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def volume(self) -> float:
        return self.side**self.dim

    def axis_edges(self, axis: int = 0) -> np.ndarray:
        return self.origin[axis] + self.h * np.arange(self.n + 1)

    def axis_centers(self, axis: int = 0) -> np.ndarray:
        return self.origin[axis] + self.h * (np.arange(self.n) + 0.5)

    def cell_centers(self) -> np.ndarray:
        """Array of shape ``shape + (dim,)`` with the midpoint of every cell."""
        axes = [self.axis_centers(k) for k in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    # cubes -------------------------------------------------------------
    def cube_side(self, cube: "Cube") -> float:
        return self.side * 2.0 ** (-cube.level)

    def cube_volume(self, cube: "Cube") -> float:
        return self.cube_side(cube) ** self.dim

    def cube_center(self, cube: "Cube") -> np.ndarray:
        ell = self.cube_side(cube)
        return np.asarray(self.origin) + (np.asarray(cube.index) + 0.5) * ell

    def cube_box(self, cube: "Cube") -> "LatticeBox":
        self.check_cube(cube)
        m = 1 << (self.depth - cube.level)
        lo = tuple(i * m for i in cube.index)
        return LatticeBox(lo, tuple(a + m for a in lo))

    def check_cube(self, cube: "Cube") -> None:
        if not 0 <= cube.level <= self.depth:
            raise GridError(f"cube level {cube.level} outside [0, {self.depth}]")
        if len(cube.index) != self.dim:
            raise GridError("cube index has wrong dimension")
        if any(not 0 <= i < (1 << cube.level) for i in cube.index):
            raise GridError(f"cube index {cube.index} outside level {cube.level}")

    def cubes(self, level: int | None = None) -> Iterator["Cube"]:
        levels = range(self.depth + 1) if level is None else [level]
        for k in levels:
            for idx in np.ndindex(*((1 << k,) * self.dim)):
                yield Cube(k, tuple(int(i) for i in idx))

    @property
    def root(self) -> "Cube":
        return Cube(0, (0,) * self.dim)

    def cube_containing(self, x: Sequence[float], level: int) -> "Cube":
        ell = self.side * 2.0 ** (-level)
        idx = tuple(
            int(math.floor((xi - oi) / ell)) for xi, oi in zip(np.atleast_1d(x), self.origin)
        )
        cube = Cube(level, idx)
        self.check_cube(cube)
        return cube

    def box_from_coords(self, lo: Sequence[float], hi: Sequence[float]) -> "LatticeBox":
        """Lattice box with real corners ``lo``/``hi``; they must sit on cell edges."""
        ilo, ihi = [], []
        for a, b, o in zip(np.atleast_1d(lo), np.atleast_1d(hi), self.origin):
            ia, ib = (a - o) / self.h, (b - o) / self.h
            if abs(ia - round(ia)) > 1e-9 or abs(ib - round(ib)) > 1e-9:
                raise GridError(f"box [{a}, {b}) is not aligned with cells of width {self.h}")
            ilo.append(int(round(ia)))
            ihi.append(int(round(ib)))
        box = LatticeBox(tuple(ilo), tuple(ihi))
        self.check_box(box)
        return box

    def check_box(self, box: "LatticeBox") -> None:
        if len(box.lo) != self.dim:
            raise GridError("box has wrong dimension")
        if any(a < 0 or b > self.n for a, b in zip(box.lo, box.hi)):
            raise GridError(f"box {box} lies outside the root")

    def box_volume(self, box: "LatticeBox") -> float:
        return box.cells * self.cell_volume

    def sample(self, fn: Callable[..., np.ndarray]) -> "GridFunction":
        """Midpoint sampling of ``fn`` (called with one coordinate array per axis)."""
        c = self.cell_centers()
        vals = fn(*[c[..., k] for k in range(self.dim)])
        return GridFunction(self, np.broadcast_to(np.asarray(vals, dtype=float), self.shape))

    def constant(self, value: float = 1.0) -> "GridFunction":
        return GridFunction(self, np.full(self.shape, float(value)))

    def indicator(self, lo: Sequence[float], hi: Sequence[float]) -> "GridFunction":
        box = self.box_from_coords(lo, hi)
        v = np.zeros(self.shape)
        v[box.slices] = 1.0
        return GridFunction(self, v)

    def refine(self, extra: int = 1) -> "DyadicGrid":
        return DyadicGrid(self.origin, self.side, self.dim, self.depth + extra)

    def to_dict(self) -> dict:
        return {"origin": list(self.origin), "side": self.side, "dimension": self.dim, "depth": self.depth}


@dataclass(frozen=True, order=True)
class Cube:
    """Dyadic cube addressed by level and integer index vector."""

    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))

    def children(self) -> list["Cube"]:
        d = len(self.index)
        out = []
        for bits in np.ndindex(*((2,) * d)):
            out.append(Cube(self.level + 1, tuple(2 * i + b for i, b in zip(self.index, bits))))
        return out

    def parent(self) -> "Cube":
        if self.level == 0:
            raise GridError("the root has no parent")
        return Cube(self.level - 1, tuple(i >> 1 for i in self.index))

    def contains(self, other: "Cube") -> bool:
        """Whether ``other`` is a (not necessarily strict) subcube."""
        if other.level < self.level:
            return False
        shift = other.level - self.level
        return all((j >> shift) == i for i, j in zip(self.index, other.index))

    def to_list(self) -> list:
        return [self.level, list(self.index)]


@dataclass(frozen=True)
class LatticeBox:
    """Half-open product of finest-cell index ranges ``[lo, hi)``."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(int(a) for a in self.lo)
        hi = tuple(int(b) for b in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
            raise GridError(f"empty or malformed box {lo}..{hi}")

    @property
    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in zip(self.lo, self.hi))

    @property
    def cells(self) -> int:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))


Region = Union[Cube, LatticeBox]


def fsum(values: np.ndarray) -> float:
    """Exactly rounded sum (Shewchuk) of an array."""
    return math.fsum(np.asarray(values, dtype=float).ravel())


@dataclass(frozen=True)
class GridFunction:
    """Piecewise-constant real function, one value per finest cell (row-major)."""

    grid: DyadicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            if v.size != math.prod(self.grid.shape):
                raise GridError(f"expected {self.grid.shape} values, got shape {v.shape}")
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise GridError("grid function values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        return fsum(self.values) * self.grid.cell_volume

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __abs__(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    def __neg__(self) -> "GridFunction":
        return self.with_values(-self.values)

    def _other(self, other) -> np.ndarray | float:
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridError("grid functions live on different grids")
            return other.values
        return float(other)

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __rsub__(self, other):
        return self.with_values(self._other(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / self._other(other))

    def __rtruediv__(self, other):
        return self.with_values(self._other(other) / self.values)

    def __pow__(self, p: float):
        return self.with_values(self.values**p)

    def sup(self) -> float:
        return float(np.max(self.values))

    def to_dict(self) -> dict:
        d = self.grid.to_dict()
        d["values"] = self.values.ravel().tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "GridFunction":
        grid = DyadicGrid(tuple(d["origin"]), d["side"], d["dimension"], d["depth"])
        return cls(grid, np.asarray(d["values"], dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        return cls.from_dict(json.loads(text))


def as_box(grid: DyadicGrid, region: Region) -> LatticeBox:
    if isinstance(region, Cube):
        return grid.cube_box(region)
    grid.check_box(region)
    return region


def average(f: GridFunction, region: Region, q: float | str = 1.0) -> float:
    """``<f>_{q,E}``; ``q="linear"`` gives the signed mean, ``q=inf`` the max of ``|f|``."""
    box = as_box(f.grid, region)
    block = f.values[box.slices]
    if q == "linear":
        return fsum(block) / block.size
    q = float(q)
    if q == math.inf:
        return float(np.max(np.abs(block)))
    if not q > 0:
        raise ValueError(f"exponent q must be positive, got {q}")
    return (fsum(np.abs(block) ** q) / block.size) ** (1.0 / q)


def weight_mass(w: GridFunction, region: Region) -> float:
    """``w(E)``, the integral of a nonnegative weight over ``E``."""
    box = as_box(w.grid, region)
    block = w.values[box.slices]
    if np.any(block < 0):
        raise ValueError("weight takes negative values")
    return fsum(block) * w.grid.cell_volume


def enumerate_boxes_1d(grid: DyadicGrid) -> Iterator[LatticeBox]:
    """Every lattice interval ``[i h, j h)`` of a one-dimensional grid."""
    if grid.dim != 1:
        raise GridError("exhaustive interval enumeration needs dim == 1")
    n = grid.n
    for length in range(1, n + 1):
        for i in range(n - length + 1):
            yield LatticeBox((i,), (i + length,))
