"""Cube families over which suprema are taken, and per-box primitives.

A family is expanded into :class:`BoxBatch` objects, each a set of boxes of
one common shape given by their lower corners.  Sums use extended-precision
prefix tables, so every box sum costs O(1) and is accurate far below the
1e-12 tolerances used by the checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .grid import Cube, DyadicGrid, GridError


@dataclass(frozen=True)
class Dyadic:
    """All cubes of the grid's dyadic structure."""


@dataclass(frozen=True)
class Full1D:
    """Every lattice interval of a one-dimensional grid."""


@dataclass(frozen=True)
class ShiftedDyadic:
    """Dyadic cubes plus the one-third shifted dyadic cubes lying inside the root."""


@dataclass(frozen=True)
class LocalizedDyadic:
    """Dyadic cubes contained in ``cube``."""

    cube: Cube


Flavor = Dyadic | Full1D | ShiftedDyadic | LocalizedDyadic


@dataclass(frozen=True)
class BoxBatch:
    starts: np.ndarray  # (B, d) lower corners in cell units
    shape: tuple[int, ...]
    disjoint: bool = True

    def __len__(self) -> int:
        return self.starts.shape[0]

    @property
    def cells(self) -> int:
        return int(np.prod(self.shape))

    def cell_indices(self, grid_shape: tuple[int, ...]) -> np.ndarray:
        """Flat indices of the cells of every box, shape ``(B, cells)``."""
        d = len(self.shape)
        if d == 1:
            return self.starts[:, :1] + np.arange(self.shape[0])[None, :]
        r = self.starts[:, 0, None, None] + np.arange(self.shape[0])[None, :, None]
        c = self.starts[:, 1, None, None] + np.arange(self.shape[1])[None, None, :]
        return (r * grid_shape[1] + c).reshape(len(self), -1)

    def windows(self, values: np.ndarray) -> np.ndarray:
        return values.ravel()[self.cell_indices(values.shape)]


def _dyadic_level_batch(grid: DyadicGrid, level: int, within: Cube | None = None) -> BoxBatch:
    m = 1 << (grid.depth - level)
    if within is None:
        idx = np.indices((1 << level,) * grid.dim).reshape(grid.dim, -1).T
    else:
        k = level - within.level
        local = np.indices((1 << k,) * grid.dim).reshape(grid.dim, -1).T
        idx = local + (np.asarray(within.index) << k)[None, :]
    return BoxBatch(idx * m, (m,) * grid.dim)


def _shift_offsets(m: int, dim: int) -> list[tuple[int, ...]]:
    base = sorted({int(round(s * m / 3.0)) % m for s in range(3)})
    offs = [o for o in np.ndindex(*((len(base),) * dim))]
    return [tuple(base[i] for i in o) for o in offs if any(base[i] for i in o)]


def batches(grid: DyadicGrid, flavor: Flavor) -> list[BoxBatch]:
    if isinstance(flavor, Dyadic):
        return [_dyadic_level_batch(grid, k) for k in range(grid.depth + 1)]
    if isinstance(flavor, LocalizedDyadic):
        grid.check_cube(flavor.cube)
        return [
            _dyadic_level_batch(grid, k, flavor.cube)
            for k in range(flavor.cube.level, grid.depth + 1)
        ]
    if isinstance(flavor, Full1D):
        if grid.dim != 1:
            raise GridError("Full1D family needs a one-dimensional grid")
        n = grid.n
        return [
            BoxBatch(np.arange(n - m + 1)[:, None], (m,), disjoint=False) for m in range(1, n + 1)
        ]
    if isinstance(flavor, ShiftedDyadic):
        out = batches(grid, Dyadic())
        n = grid.n
        for level in range(1, grid.depth + 1):
            m = 1 << (grid.depth - level)
            for off in _shift_offsets(m, grid.dim):
                axes = []
                for o in off:
                    s = np.arange(o, n - m + 1, m)
                    axes.append(s)
                if any(len(a) == 0 for a in axes):
                    continue
                starts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, grid.dim)
                out.append(BoxBatch(starts, (m,) * grid.dim))
        return out
    raise TypeError(f"unknown cube family {flavor!r}")


class PrefixTable:
    """Summed-area table in extended precision."""

    def __init__(self, values: np.ndarray):
        v = np.asarray(values, dtype=np.longdouble)
        self.dim = v.ndim
        p = np.zeros(tuple(s + 1 for s in v.shape), dtype=np.longdouble)
        if self.dim == 1:
            p[1:] = np.cumsum(v)
        else:
            p[1:, 1:] = np.cumsum(np.cumsum(v, axis=0), axis=1)
        self.p = p

    def box_sums(self, batch: BoxBatch) -> np.ndarray:
        s = batch.starts
        if self.dim == 1:
            a = s[:, 0]
            out = self.p[a + batch.shape[0]] - self.p[a]
        else:
            r0, c0 = s[:, 0], s[:, 1]
            r1, c1 = r0 + batch.shape[0], c0 + batch.shape[1]
            out = self.p[r1, c1] - self.p[r0, c1] - self.p[r1, c0] + self.p[r0, c0]
        return out.astype(float)


class RangeMax:
    """Sparse table for O(1) range maxima on a 1-D array."""

    def __init__(self, values: np.ndarray):
        v = np.asarray(values, dtype=float)
        table = [v]
        k = 1
        while (1 << k) <= len(v):
            prev = table[-1]
            half = 1 << (k - 1)
            table.append(np.maximum(prev[:-half], prev[half:]))
            k += 1
        self.table = table

    def query(self, starts: np.ndarray, length: int) -> np.ndarray:
        k = length.bit_length() - 1
        t = self.table[k]
        return np.maximum(t[starts], t[starts + length - (1 << k)])


def box_max(values: np.ndarray, batch: BoxBatch, table: RangeMax | None = None) -> np.ndarray:
    if values.ndim == 1 and table is not None:
        return table.query(batch.starts[:, 0], batch.shape[0])
    return batch.windows(values).max(axis=1)


def family_max(grid: DyadicGrid, bs: list[BoxBatch], per_box: list[np.ndarray]) -> np.ndarray:
    """Per-cell supremum of box values over the boxes containing the cell (0 if none)."""
    out = np.zeros(grid.n**grid.dim)
    full = [(b, v) for b, v in zip(bs, per_box) if not b.disjoint]
    for b, v in zip(bs, per_box):
        if not b.disjoint:
            continue
        idx = b.cell_indices(grid.shape)
        vals = np.broadcast_to(np.asarray(v)[:, None], idx.shape)
        cur = out[idx]
        out[idx] = np.maximum(cur, vals)
    if full:
        out = np.maximum(out, _overlapping_max_1d(grid.n, full))
    return out.reshape(grid.shape)


def _overlapping_max_1d(n: int, items: list[tuple[BoxBatch, np.ndarray]]) -> np.ndarray:
    # table[i, j] holds the value of [i, j); cell c sees every i <= c < j.
    table = np.full((n, n + 1), -np.inf)
    for b, v in items:
        s = b.starts[:, 0]
        table[s, s + b.shape[0]] = np.maximum(table[s, s + b.shape[0]], v)
    suffix = np.maximum.accumulate(table[:, ::-1], axis=1)[:, ::-1]
    reach = suffix[:, 1:]  # reach[i, c] = max over j >= c + 1
    reach = np.where(np.tri(n, n, dtype=bool).T, reach, -np.inf)
    best = np.maximum.accumulate(reach, axis=0)[-1]
    return np.where(np.isfinite(best), best, 0.0)


def iter_boxes(bs: list[BoxBatch]) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    for b in bs:
        for s in b.starts:
            lo = tuple(int(x) for x in s)
            yield lo, tuple(a + m for a, m in zip(lo, b.shape))


def sup_over_family(
    grid: DyadicGrid,
    flavor: Flavor,
    stat: Callable[[BoxBatch], np.ndarray],
) -> tuple[float, tuple[tuple[int, ...], tuple[int, ...]] | None]:
    """Largest box statistic over the family and the box attaining it."""
    best, where = -np.inf, None
    for b in batches(grid, flavor):
        vals = stat(b)
        if len(vals) == 0:
            continue
        i = int(np.argmax(vals))
        if vals[i] > best:
            best = float(vals[i])
            lo = tuple(int(x) for x in b.starts[i])
            where = (lo, tuple(a + m for a, m in zip(lo, b.shape)))
    return best, where
