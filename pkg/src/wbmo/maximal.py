"""Maximal-type operators, medians and local oscillations on grid functions.

All cubes in a family have equal-volume cells, so order statistics inside a
cube reduce to counting cells.  For a box ``Q`` with sorted values
``x_1 <= ... <= x_m`` the quantities below are:

* mean oscillation ``<|f - <f>_Q|>_Q``;
* weak oscillation ``inf_c |Q|^-1 ||(f - c) 1_Q||_{L^{1,inf}}``;
* median oscillation ``omega_lambda(f; Q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .families import (
    BoxBatch,
    Dyadic,
    Flavor,
    PrefixTable,
    batches,
    family_max,
)
from .grid import Cube, GridFunction, LatticeBox, Region, as_box

BISECTION_STEPS = 60


@dataclass(frozen=True)
class MedianSet:
    """Closed interval ``[lo, hi]`` of valid medians."""

    lo: float
    hi: float

    def __contains__(self, m: float) -> bool:
        return self.lo <= m <= self.hi


# ----------------------------------------------------------------------------
# order statistics on sorted rows


def weak_quasinorm_sorted(x: np.ndarray, c: float | np.ndarray) -> np.ndarray:
    """``sup_t t #{|x - c| > t} / m`` for each row of ``x``.

    For step functions the supremum is approached just below a breakpoint, so it
    equals ``max_k k d_(k)`` with ``d_(k)`` the k-th largest deviation.
    """
    x = np.atleast_2d(x)
    m = x.shape[1]
    dev = np.sort(np.abs(x - np.asarray(c, dtype=float).reshape(-1, 1)), axis=1)[:, ::-1]
    return (dev * np.arange(1, m + 1)).max(axis=1) / m


@lru_cache(maxsize=64)
def _window_plan(m: int):
    k = np.concatenate([np.full(kk, kk) for kk in range(1, m + 1)])
    j = np.concatenate([np.arange(kk) for kk in range(1, m + 1)])
    lo_idx = j + m - k
    hi_idx = j
    has_prev = j >= 1
    prev = np.arange(len(k)) - 1
    return k.astype(float), lo_idx, hi_idx, has_prev, prev


def _feasible(x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Rows for which some centre c gives ``max_k k d_(k)(c) < s`` on an open set.

    ``k d_(k)(c) <= s`` holds iff a run of ``m-k+1`` consecutive sorted values
    fits in ``[c - s/k, c + s/k]``; the admissible centres for each ``k`` form a
    union of intervals and we look for a point covered for every ``k``.
    """
    b, m = x.shape
    k, lo_idx, hi_idx, has_prev, prev = _window_plan(m)
    rad = s[:, None] / k[None, :]
    left = x[:, lo_idx] - rad
    right = x[:, hi_idx] + rad
    # make intervals of one k disjoint so coverage counts each k once
    left = np.where(has_prev[None, :], np.maximum(left, right[:, np.maximum(prev, 0)]), left)
    left = np.minimum(left, right)
    coords = np.concatenate([right, left], axis=1)
    delta = np.concatenate([-np.ones_like(right), np.ones_like(left)], axis=1)
    order = np.argsort(coords, axis=1, kind="stable")
    coords = np.take_along_axis(coords, order, axis=1)
    delta = np.take_along_axis(delta, order, axis=1)
    count = np.cumsum(delta, axis=1)
    gap = np.diff(coords, axis=1)
    return np.any((count[:, :-1] >= m - 0.5) & (gap > 0), axis=1)


def weak_osc_sorted(x: np.ndarray) -> np.ndarray:
    """``inf_c sup_t t #{|x - c| > t} / m`` for each sorted row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    b, m = x.shape
    med = x[:, (m - 1) // 2]
    hi = weak_quasinorm_sorted(x, med) * m
    lo = np.zeros(b)
    const = x[:, -1] == x[:, 0]
    hi[const] = 0.0
    active = ~const
    for _ in range(BISECTION_STEPS):
        if not active.any():
            break
        mid = 0.5 * (lo[active] + hi[active])
        ok = _feasible(x[active], mid)
        h, l = hi[active], lo[active]
        hi[active] = np.where(ok, mid, h)
        lo[active] = np.where(ok, l, mid)
    return hi / m


def median_osc_sorted(x: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """``omega_lambda`` and an optimal centre for each sorted row."""
    x = np.atleast_2d(x)
    m = x.shape[1]
    allowed = math.floor(lam * m + 1e-9)
    width = m - allowed
    if width <= 1:
        return np.zeros(x.shape[0]), x[:, 0].copy()
    spans = x[:, width - 1 :] - x[:, : m - width + 1]
    j = np.argmin(spans, axis=1)
    rows = np.arange(x.shape[0])
    omega = spans[rows, j] / 2.0
    centre = (x[rows, j] + x[rows, j + width - 1]) / 2.0
    return omega, centre


def median_bounds_sorted(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(x)
    m = x.shape[1]
    half = m // 2
    return x[:, m - half - 1], x[:, half]


# ----------------------------------------------------------------------------
# single boxes


def _sorted_block(f: GridFunction, region: Region) -> np.ndarray:
    box = as_box(f.grid, region)
    return np.sort(f.values[box.slices].ravel())


def median(f: GridFunction, region: Region) -> MedianSet:
    lo, hi = median_bounds_sorted(_sorted_block(f, region))
    return MedianSet(float(lo[0]), float(hi[0]))


def median_oscillation(f: GridFunction, region: Region, lam: float | None = None) -> float:
    """``omega_lambda(f; Q)``; ``lam`` defaults to ``2^(-d-2)``."""
    if lam is None:
        lam = 2.0 ** (-f.grid.dim - 2)
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    omega, _ = median_osc_sorted(_sorted_block(f, region), lam)
    return float(omega[0])


def weak_oscillation(f: GridFunction, region: Region) -> float:
    """``inf_c |Q|^-1 ||(f - c) 1_Q||_{L^{1,inf}(Q)}``."""
    return float(weak_osc_sorted(_sorted_block(f, region))[0])


def mean_oscillation(f: GridFunction, region: Region) -> float:
    box = as_box(f.grid, region)
    block = f.values[box.slices].ravel()
    return float(np.mean(np.abs(block - math.fsum(block) / block.size)))


# ----------------------------------------------------------------------------
# per-box statistics over a batch


def batch_means(table: PrefixTable, batch: BoxBatch) -> np.ndarray:
    return table.box_sums(batch) / batch.cells


def batch_mean_osc(values: np.ndarray, batch: BoxBatch, chunk: int = 1 << 22) -> np.ndarray:
    out = np.empty(len(batch))
    step = max(1, chunk // batch.cells)
    for a in range(0, len(batch), step):
        sub = BoxBatch(batch.starts[a : a + step], batch.shape)
        w = sub.windows(values)
        mu = w.mean(axis=1, keepdims=True)
        out[a : a + step] = np.abs(w - mu).mean(axis=1)
    return out


def batch_sorted(values: np.ndarray, batch: BoxBatch) -> np.ndarray:
    return np.sort(batch.windows(values), axis=1)


def batch_l1_inf_osc(values: np.ndarray, batch: BoxBatch) -> np.ndarray:
    """``inf_c <|f - c|>_Q``, attained at any median."""
    x = batch_sorted(values, batch)
    med = x[:, (x.shape[1] - 1) // 2][:, None]
    return np.abs(x - med).mean(axis=1)


def batch_weak_osc(values: np.ndarray, batch: BoxBatch) -> np.ndarray:
    x = batch_sorted(values, batch)
    if x.shape[1] == 1:
        return np.zeros(len(batch))
    return weak_osc_sorted(x)


def batch_median_osc(values: np.ndarray, batch: BoxBatch, lam: float) -> np.ndarray:
    return median_osc_sorted(batch_sorted(values, batch), lam)[0]


# ----------------------------------------------------------------------------
# maximal operators


OSCILLATIONS = ("mean", "optimal", "weak", "median")


@lru_cache(maxsize=64)
def _cached_oscillations(raw: bytes, shape, grid, flavor, kind: str, lam):
    values = np.frombuffer(raw).reshape(shape)
    bs = batches(grid, flavor)
    if kind == "mean":
        per = [batch_mean_osc(values, b) for b in bs]
    elif kind == "optimal":
        per = [batch_l1_inf_osc(values, b) for b in bs]
    elif kind == "weak":
        per = [batch_weak_osc(values, b) for b in bs]
    elif kind == "median":
        per = [batch_median_osc(values, b, lam) for b in bs]
    else:
        raise ValueError(f"unknown oscillation {kind!r}; expected one of {OSCILLATIONS}")
    for p in per:
        p.flags.writeable = False
    return bs, per


def family_oscillations(f: GridFunction, flavor: Flavor, kind: str, lam: float | None = None):
    """Per-box oscillations of ``f`` over a family, memoized on the values."""
    v = np.ascontiguousarray(f.values, dtype=float)
    return _cached_oscillations(v.tobytes(), v.shape, f.grid, flavor, kind, lam)


def _family_sup(f: GridFunction, bs, per) -> GridFunction:
    return GridFunction(f.grid, family_max(f.grid, bs, per))


def maximal(f: GridFunction, flavor: Flavor = Dyadic()) -> GridFunction:
    """``Mf = sup_Q <|f|>_Q 1_Q`` over the cube family."""
    table = PrefixTable(np.abs(f.values))
    bs = batches(f.grid, flavor)
    return _family_sup(f, bs, [batch_means(table, b) for b in bs])


def sharp_maximal(f: GridFunction, flavor: Flavor = Dyadic()) -> GridFunction:
    return _family_sup(f, *family_oscillations(f, flavor, "mean"))


def weak_sharp_maximal(f: GridFunction, flavor: Flavor = Dyadic()) -> GridFunction:
    return _family_sup(f, *family_oscillations(f, flavor, "weak"))


def median_sharp_maximal(
    f: GridFunction, lam: float = 0.5, flavor: Flavor = Dyadic()
) -> GridFunction:
    """``M^#_lambda f = sup_Q omega_lambda(f; Q) 1_Q``."""
    return _family_sup(f, *family_oscillations(f, flavor, "median", float(lam)))


def john_stromberg_band(
    fs: list[GridFunction], flavor: Flavor = Dyadic(), lam: float = 0.5
) -> dict:
    """Range of ``M^# f / M(M^#_lam f)`` over all cells of all inputs.

    Cells where the denominator vanishes but the numerator does not are
    counted separately; they make the upper end of the band infinite.
    """
    lo, hi, degenerate, cells = math.inf, 0.0, 0, 0
    for f in fs:
        num = sharp_maximal(f, flavor).values
        den = maximal(median_sharp_maximal(f, lam, flavor), flavor).values
        pos = den > 0
        both = pos & (num > 0)
        degenerate += int(np.count_nonzero(~pos & (num > 0)))
        cells += num.size
        if both.any():
            r = num[both] / den[both]
            lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
    if degenerate:
        hi = math.inf
    return {"lower": lo, "upper": hi, "degenerate_cells": degenerate, "cells": cells, "lambda": lam}


__all__ = [
    "MedianSet",
    "median",
    "median_oscillation",
    "weak_oscillation",
    "mean_oscillation",
    "maximal",
    "sharp_maximal",
    "weak_sharp_maximal",
    "median_sharp_maximal",
    "john_stromberg_band",
    "family_oscillations",
    "weak_quasinorm_sorted",
    "weak_osc_sorted",
    "median_osc_sorted",
    "LatticeBox",
    "Cube",
]
