"""Sparse families, sparse operators and the three non-BMO constructions.

Members are either dyadic cubes of a grid or :class:`RealSet` unions of
real boxes.  A real member may be much finer than the grid; the sparse
operator is then returned as its cell-average projection, which is exact for
means over lattice-aligned sets, and :func:`sparse_apply_at` evaluates it
pointwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .families import Dyadic, PrefixTable
from .grid import Cube, DyadicGrid, GridError, GridFunction, LatticeBox, fsum
from .weights import ainfty_characteristic


@dataclass(frozen=True)
class RealSet:
    """Finite union of pairwise disjoint half-open boxes ``[lo, hi)``."""

    boxes: tuple[tuple[tuple[float, ...], tuple[float, ...]], ...]

    def __post_init__(self):
        clean = []
        for lo, hi in self.boxes:
            lo = tuple(float(a) for a in np.atleast_1d(lo))
            hi = tuple(float(b) for b in np.atleast_1d(hi))
            if len(lo) != len(hi) or any(b <= a for a, b in zip(lo, hi)):
                raise GridError(f"empty box {lo}..{hi}")
            clean.append((lo, hi))
        object.__setattr__(self, "boxes", tuple(clean))

    @classmethod
    def interval(cls, a: float, b: float) -> "RealSet":
        return cls((((a,), (b,)),))

    @classmethod
    def intervals(cls, pairs: Iterable[tuple[float, float]]) -> "RealSet":
        return cls(tuple(((a,), (b,)) for a, b in pairs))

    @property
    def dim(self) -> int:
        return len(self.boxes[0][0])

    @property
    def measure(self) -> float:
        return fsum([math.prod(b - a for a, b in zip(lo, hi)) for lo, hi in self.boxes])

    def contains(self, x: Sequence[float]) -> bool:
        x = np.atleast_1d(x)
        return any(all(a <= xi < b for a, b, xi in zip(lo, hi, x)) for lo, hi in self.boxes)

    def to_list(self) -> list:
        return [[list(lo), list(hi)] for lo, hi in self.boxes]


Member = Union[Cube, RealSet]


def _overlap_1d(edges: np.ndarray, a: float, b: float) -> np.ndarray:
    return np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None)


def member_fraction(grid: DyadicGrid, member: Member) -> np.ndarray:
    """``|S cap C| / |C|`` for every finest cell ``C``."""
    if isinstance(member, Cube):
        out = np.zeros(grid.shape)
        out[grid.cube_box(member).slices] = 1.0
        return out
    out = np.zeros(grid.shape)
    root_lo = np.asarray(grid.origin)
    for lo, hi in member.boxes:
        if len(lo) != grid.dim:
            raise GridError("member dimension does not match the grid")
        if np.any(np.asarray(lo) < root_lo - 1e-12) or np.any(np.asarray(hi) > root_lo + grid.side + 1e-12):
            raise GridError(f"member box {lo}..{hi} leaves the root")
        parts = [_overlap_1d(grid.axis_edges(k), lo[k], hi[k]) / grid.h for k in range(grid.dim)]
        frac = parts[0] if grid.dim == 1 else np.multiply.outer(parts[0], parts[1])
        out += frac
    return out


def _interval_pieces(grid: DyadicGrid, a: float, b: float) -> list[tuple[int, int, float]]:
    """Cell ranges ``[i, j)`` covered by ``[a, b)`` with the covered fraction of each cell."""
    o, h, n = grid.origin[0], grid.h, grid.n
    if a < o - 1e-12 or b > o + grid.side + 1e-12:
        raise GridError(f"interval [{a}, {b}) leaves the root")
    i0 = min(max(int(math.floor((a - o) / h)), 0), n - 1)
    i1 = max(min(int(math.ceil((b - o) / h)), n), i0 + 1)
    edges = o + h * np.arange(i0, i1 + 1)
    pieces = []
    first = (min(edges[1], b) - max(edges[0], a)) / h
    if i1 - i0 == 1:
        return [(i0, i1, first)] if first > 0 else []
    last = (min(edges[-1], b) - max(edges[-2], a)) / h
    if first > 0:
        pieces.append((i0, i0 + 1, first))
    if i1 - 1 > i0 + 1:
        pieces.append((i0 + 1, i1 - 1, 1.0))
    if last > 0:
        pieces.append((i1 - 1, i1, last))
    return pieces


def member_measure(grid: DyadicGrid, member: Member) -> float:
    return grid.cube_volume(member) if isinstance(member, Cube) else member.measure


def member_contains(grid: DyadicGrid, member: Member, x: Sequence[float]) -> bool:
    if isinstance(member, RealSet):
        return member.contains(x)
    lo = grid.cube_center(member) - grid.cube_side(member) / 2
    hi = lo + grid.cube_side(member)
    x = np.atleast_1d(x)
    return bool(np.all(lo <= x) and np.all(x < hi))


@dataclass
class SparseFamily:
    grid: DyadicGrid
    members: list[Member]
    eta: float = 0.5
    witness: dict | None = None  # member index -> RealSet or array of flat cell indices
    name: str = ""

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")

    def __len__(self) -> int:
        return len(self.members)

    @property
    def dyadic(self) -> bool:
        return all(isinstance(m, Cube) for m in self.members)

    def to_dict(self) -> dict:
        def enc(m):
            return {"cube": m.to_list()} if isinstance(m, Cube) else {"set": m.to_list()}

        d = {"grid": self.grid.to_dict(), "eta": self.eta, "name": self.name, "members": [enc(m) for m in self.members]}
        if self.witness is not None:
            wit = {}
            for k, v in self.witness.items():
                wit[str(k)] = {"set": v.to_list()} if isinstance(v, RealSet) else {"cells": [int(i) for i in v]}
            d["witness"] = wit
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SparseFamily":
        g = d["grid"]
        grid = DyadicGrid(tuple(g["origin"]), g["side"], g["dimension"], g["depth"])

        def dec_set(raw):
            return RealSet(tuple((tuple(lo), tuple(hi)) for lo, hi in raw))

        members = []
        for m in d["members"]:
            if "cube" in m:
                members.append(Cube(m["cube"][0], tuple(m["cube"][1])))
            else:
                members.append(dec_set(m["set"]))
        witness = None
        if "witness" in d:
            witness = {}
            for k, v in d["witness"].items():
                witness[int(k)] = dec_set(v["set"]) if "set" in v else np.asarray(v["cells"], dtype=int)
        return cls(grid, members, d["eta"], witness, d.get("name", ""))

    @classmethod
    def from_json(cls, text: str) -> "SparseFamily":
        return cls.from_dict(json.loads(text))


# ----------------------------------------------------------------------------
# sparsity


@dataclass
class SparsityResult:
    ok: bool
    eta: float
    witness: dict  # member index -> flat cell indices of E_Q
    worst_fraction: float
    violator: Cube | None = None


def verify_sparsity(family: SparseFamily, eta: float | None = None) -> SparsityResult:
    """Bottom-up greedy witness ``E_Q = Q minus (strictly smaller members)``.

    For dyadic members this witness is optimal, so a violation certifies that
    the family is not ``eta``-sparse.
    """
    eta = family.eta if eta is None else eta
    if not family.dyadic:
        raise GridError("greedy sparsity check needs dyadic cube members")
    grid = family.grid
    uniq: dict[Cube, int] = {}
    for i, m in enumerate(family.members):
        grid.check_cube(m)
        uniq.setdefault(m, i)
    by_level: dict[int, list[Cube]] = {}
    for c in uniq:
        by_level.setdefault(c.level, []).append(c)
    covered = np.zeros(grid.shape, dtype=bool)
    witness: dict[int, np.ndarray] = {}
    worst, violator = 1.0, None
    flat_index = np.arange(grid.n**grid.dim).reshape(grid.shape)
    for level in sorted(by_level, reverse=True):
        newly = np.zeros(grid.shape, dtype=bool)
        for c in sorted(by_level[level]):
            sl = grid.cube_box(c).slices
            free = ~covered[sl]
            frac = float(free.mean())
            witness[uniq[c]] = flat_index[sl][free]
            if frac < worst:
                worst = frac
            if frac < eta - 1e-15 and violator is None:
                violator = c
            newly[sl] = True
        covered |= newly
    # repeated members share one witness set; a repeat makes the family non-sparse
    if len(uniq) < len(family.members):
        for i, m in enumerate(family.members):
            if uniq[m] != i:
                violator = violator or m
                worst = 0.0
    return SparsityResult(violator is None, eta, witness, worst, violator)


def check_witness(family: SparseFamily, tol: float = 1e-12) -> tuple[bool, str]:
    """Validate an explicitly supplied witness of real sets (disjoint, inside, large)."""
    if family.witness is None:
        return False, "no witness"
    grid = family.grid
    masses = []
    for i, m in enumerate(family.members):
        e = family.witness.get(i)
        if e is None:
            return False, f"member {i} has no witness set"
        if isinstance(e, RealSet):
            inside = all(
                any(all(a <= x and y <= b for a, b, x, y in zip(lo, hi, elo, ehi)) for lo, hi in _boxes(grid, m))
                for elo, ehi in e.boxes
            )
            measure = e.measure
        else:
            frac = member_fraction(grid, m).ravel()[e]
            inside = bool(np.all(frac >= 1.0 - tol))
            measure = len(e) * grid.cell_volume
        if not inside:
            return False, f"witness of member {i} leaves the member"
        if measure < family.eta * member_measure(grid, m) * (1 - tol):
            return False, f"witness of member {i} is too small"
        masses.append(e)
    boxes = [b for e in masses if isinstance(e, RealSet) for b in e.boxes]
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            (l1, h1), (l2, h2) = boxes[a], boxes[b]
            if all(max(x1, x2) < min(y1, y2) for x1, y1, x2, y2 in zip(l1, h1, l2, h2)):
                return False, "witness sets overlap"
    cells = [e for e in masses if not isinstance(e, RealSet)]
    if cells:
        allc = np.concatenate(cells)
        if len(np.unique(allc)) != len(allc):
            return False, "witness sets overlap"
    return True, "ok"


def _boxes(grid: DyadicGrid, m: Member):
    if isinstance(m, RealSet):
        return m.boxes
    lo = tuple(grid.cube_center(m) - grid.cube_side(m) / 2)
    return ((lo, tuple(a + grid.cube_side(m) for a in lo)),)


# ----------------------------------------------------------------------------
# operators


def _average(f: GridFunction, member: Member, table: PrefixTable | None = None) -> float:
    grid = f.grid
    if isinstance(member, Cube):
        box = grid.cube_box(member)
        return fsum(f.values[box.slices]) / box.cells
    frac = member_fraction(grid, member)
    return fsum(f.values * frac) * grid.cell_volume / member.measure


def _dyadic_coefficients(f: GridFunction, cubes: list[Cube], values: np.ndarray | None = None):
    """Accumulate ``sum_Q coeff_Q 1_Q`` level by level; coeff defaults to ``<f>_Q``."""
    grid = f.grid
    out = np.zeros(grid.shape)
    table = PrefixTable(f.values) if values is None else None
    per_level: dict[int, list[int]] = {}
    for i, c in enumerate(cubes):
        per_level.setdefault(c.level, []).append(i)
    for level, ids in per_level.items():
        k = 1 << level
        m = grid.n // k
        coeff = np.zeros((k,) * grid.dim)
        idx = np.asarray([cubes[i].index for i in ids])
        if values is None:
            from .families import BoxBatch

            sums = table.box_sums(BoxBatch(idx * m, (m,) * grid.dim))
            vals = sums / m**grid.dim
        else:
            vals = values[ids]
        np.add.at(coeff, tuple(idx.T), vals)
        up = coeff
        for ax in range(grid.dim):
            up = np.repeat(up, m, axis=ax)
        out += up
    return out


def _apply_sets_1d(f: GridFunction, sets: list[RealSet]) -> np.ndarray:
    grid = f.grid
    p = np.concatenate([[0.0], np.cumsum(f.values, dtype=np.longdouble)])
    diff = np.zeros(grid.n + 1, dtype=np.longdouble)
    partial = np.zeros(grid.n)
    for s in sets:
        pieces = [pc for a, b in s.boxes for pc in _interval_pieces(grid, a[0], b[0])]
        mass = math.fsum(float(p[j] - p[i]) * fr for i, j, fr in pieces) * grid.h
        avg = mass / s.measure
        for i, j, fr in pieces:
            if fr == 1.0:
                diff[i] += avg
                diff[j] -= avg
            else:
                partial[i] += avg * fr
    return np.cumsum(diff[:-1]).astype(float) + partial


def sparse_apply(family: SparseFamily, f: GridFunction) -> GridFunction:
    """Cell averages of ``A_S f = sum_Q <f>_Q 1_Q`` (``f`` itself is used, not ``|f|``).

    Every cube is a union of cells, so for dyadic families the result is
    ``A_S f`` itself.
    """
    cubes = [m for m in family.members if isinstance(m, Cube)]
    sets = [m for m in family.members if not isinstance(m, Cube)]
    out = _dyadic_coefficients(f, cubes) if cubes else np.zeros(f.grid.shape)
    if sets and f.grid.dim == 1:
        out = out + _apply_sets_1d(f, sets)
    else:
        for s in sets:
            out = out + _average(f, s) * member_fraction(f.grid, s)
    return GridFunction(f.grid, out)


def sparse_apply_at(family: SparseFamily, f: GridFunction, x: Sequence[float]) -> float:
    """Pointwise value ``sum_{Q containing x} <f>_Q``."""
    terms = [_average(f, m) for m in family.members if member_contains(family.grid, m, x)]
    return math.fsum(terms)


def height_function(family: SparseFamily) -> GridFunction:
    """Cell averages of ``h_S = sum_J 1_J``; integer-valued when members are unions of cells."""
    grid = family.grid
    out = np.zeros(grid.shape)
    for m in family.members:
        out += member_fraction(grid, m)
    return GridFunction(grid, out)


def carleson_sum(
    family: SparseFamily, w: GridFunction, q0: Cube, ainfty: float | None = None
) -> tuple[float, float]:
    """``sum_{Q in S, Q in Q0} w(Q)`` and the packing bound ``eta^-1 [w]_Ainf w(Q0)``."""
    grid = family.grid
    table = PrefixTable(w.values)
    total = []
    for m in set(family.members):
        if not isinstance(m, Cube):
            raise GridError("packing sums need dyadic members")
        if q0.contains(m):
            box = grid.cube_box(m)
            total.append(_box_mass(table, box) * grid.cell_volume)
    if ainfty is None:
        ainfty = ainfty_characteristic(w, Dyadic())
    mass0 = _box_mass(table, grid.cube_box(q0)) * grid.cell_volume
    return math.fsum(total), ainfty * mass0 / family.eta


def _box_mass(table: PrefixTable, box: LatticeBox) -> float:
    from .families import BoxBatch

    b = BoxBatch(np.asarray([box.lo]), tuple(h - l for l, h in zip(box.lo, box.hi)))
    return float(table.box_sums(b)[0])


# ----------------------------------------------------------------------------
# constructions


def make_fn_family(n_max: int) -> SparseFamily:
    """``F_n = [0,1) u [n, n+1)``, ``1 <= n <= n_max``, on unit cells of ``[0, 2^k)``."""
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    k = max(1, math.ceil(math.log2(n_max + 1)))
    grid = DyadicGrid.interval(0.0, float(2**k), k)
    members = [RealSet.intervals([(0.0, 1.0), (float(n), n + 1.0)]) for n in range(1, n_max + 1)]
    witness = {i: RealSet.interval(float(n), n + 1.0) for i, n in enumerate(range(1, n_max + 1))}
    return SparseFamily(grid, members, 0.5, witness, f"fn({n_max})")


def make_growing_family(n_max: int, depth: int = 4) -> SparseFamily:
    """``[0, 2^n)``, ``0 <= n <= n_max``, on a grid rooted at ``[0, 2^n_max)``."""
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    grid = DyadicGrid.interval(0.0, float(2**n_max), depth)
    members = [RealSet.interval(0.0, float(2**n)) for n in range(n_max + 1)]
    witness = {0: RealSet.interval(0.0, 1.0)}
    witness.update({n: RealSet.interval(float(2 ** (n - 1)), float(2**n)) for n in range(1, n_max + 1)})
    return SparseFamily(grid, members, 0.5, witness, f"growing({n_max})")


def make_shrinking_family(n_max: int, grid: DyadicGrid | None = None) -> SparseFamily:
    """``[0, 2^-n)``, ``0 <= n <= n_max``.

    The default grid is rooted at ``[-1, 1)`` so the symmetric intervals
    ``[-2^-n, 2^-n)`` are lattice boxes.
    """
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    if grid is None:
        grid = DyadicGrid.interval(-1.0, 1.0, min(n_max + 1, 20))
    members = [RealSet.interval(0.0, 2.0**-n) for n in range(n_max + 1)]
    witness = {n: RealSet.interval(2.0 ** (-n - 1), 2.0**-n) for n in range(n_max)}
    witness[n_max] = RealSet.interval(0.0, 2.0**-n_max)
    return SparseFamily(grid, members, 0.5, witness, f"shrinking({n_max})")


def shrinking_dyadic_family(grid: DyadicGrid, n_max: int | None = None) -> SparseFamily:
    """The intervals ``[0, 2^-n)`` as dyadic cubes ``(n, 0)`` of a grid rooted at ``[0, 1)``."""
    top = grid.depth if n_max is None else min(n_max, grid.depth)
    members = [Cube(n, (0,) * grid.dim) for n in range(top + 1)]
    return SparseFamily(grid, members, 0.5, None, f"shrinking-dyadic({top})")


@dataclass
class ShrinkingResult:
    n: int
    n_trunc: int
    mean: float
    exact: float  # closed form with the truncated tail
    limit: float  # n/2 + 1
    oscillation: float
    cells: int


def shrinking_average(n: int, n_trunc: int | None = None) -> ShrinkingResult:
    """Mean and mean oscillation over ``J_n = [-2^-n, 2^-n)`` of ``A_S 1_[0,1)``.

    The grid on ``[-1, 1)`` has depth ``n + 3`` so ``J_n`` spans eight cells;
    finer members enter through exact cell fractions.  The oscillation of the
    cell projection is a lower bound for that of ``A_S 1_[0,1)`` itself.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    n_trunc = n + 45 if n_trunc is None else n_trunc
    if n_trunc < n:
        raise ValueError("truncation must be at least n")
    grid = DyadicGrid.interval(-1.0, 1.0, n + 3)
    fam = make_shrinking_family(n_trunc, grid)
    f = grid.indicator([0.0], [1.0])
    a = sparse_apply(fam, f).values
    box = grid.box_from_coords([-(2.0**-n)], [2.0**-n])
    block = a[box.slices]
    mean = fsum(block) / block.size
    osc = float(np.mean(np.abs(block - mean)))
    exact = n / 2 + 1 - 2.0 ** (n - 1 - n_trunc)
    return ShrinkingResult(n, n_trunc, mean, exact, n / 2 + 1, osc, block.size)


def random_sparse_family(
    grid: DyadicGrid, rng: np.random.Generator, eta: float = 0.5, tries: int = 6, top: Cube | None = None
) -> SparseFamily:
    """Random dyadic family built by stopping times, so it is ``eta``-sparse by construction.

    Each member keeps at least an ``eta`` fraction of itself free of the
    stopping cubes chosen beneath it.
    """
    top = grid.root if top is None else top
    members: list[Cube] = []
    stack = [top]
    while stack:
        q = stack.pop()
        members.append(q)
        if q.level >= grid.depth:
            continue
        budget = (1.0 - eta) * 2.0 ** (-q.level * grid.dim)
        chosen: list[Cube] = []
        used = 0.0
        for _ in range(tries):
            level = int(rng.integers(q.level + 1, grid.depth + 1))
            k = level - q.level
            local = rng.integers(0, 1 << k, size=grid.dim)
            cand = Cube(level, tuple(int(i) for i in (np.asarray(q.index) << k) + local))
            vol = 2.0 ** (-level * grid.dim)
            if used + vol > budget + 1e-15:
                continue
            if any(c.contains(cand) or cand.contains(c) for c in chosen):
                continue
            chosen.append(cand)
            used += vol
        if rng.random() < 0.85:
            stack.extend(chosen)
    return SparseFamily(grid, members, eta, None, "random")


__all__ = [
    "RealSet",
    "SparseFamily",
    "SparsityResult",
    "verify_sparsity",
    "check_witness",
    "member_fraction",
    "sparse_apply",
    "sparse_apply_at",
    "height_function",
    "carleson_sum",
    "make_fn_family",
    "make_growing_family",
    "make_shrinking_family",
    "shrinking_dyadic_family",
    "shrinking_average",
    "ShrinkingResult",
    "random_sparse_family",
    "verify_wbmosparse",
    "proof_step_margin",
    "WEAK_SPARSE_CONSTANT",
]


# ----------------------------------------------------------------------------
# sparse operators into weighted BMO

# Empirical weak-type constant of dyadic sparse operators, in units of 1/eta;
# calibrated once over random families and frozen with headroom.
WEAK_SPARSE_CONSTANT = 2.0
BMOCONST_FACTOR = 2.0


def _ancestor_and_descendant_sums(family: SparseFamily, f: GridFunction, sigma: GridFunction):
    """Per dyadic cube: ``sum_{Q in S, Q contains Q0} <f>_Q`` and ``sum_{Q in S, Q in Q0} sigma(Q)``."""
    grid = family.grid
    d = grid.dim
    ftab, stab = PrefixTable(f.values), PrefixTable(sigma.values)
    from .families import BoxBatch

    coeff, mass = [], []
    counts: dict[Cube, int] = {}
    for m in family.members:
        counts[m] = counts.get(m, 0) + 1
    for level in range(grid.depth + 1):
        coeff.append(np.zeros((1 << level,) * d))
        mass.append(np.zeros((1 << level,) * d))
    for c, k in counts.items():
        m = grid.n >> c.level
        b = BoxBatch(np.asarray([c.index]) * m, (m,) * d)
        coeff[c.level][c.index] += k * float(ftab.box_sums(b)[0]) / m**d
        mass[c.level][c.index] += k * float(stab.box_sums(b)[0]) * grid.cell_volume
    anc = [coeff[0]]
    for level in range(1, grid.depth + 1):
        up = anc[-1]
        for ax in range(d):
            up = np.repeat(up, 2, axis=ax)
        anc.append(up + coeff[level])
    desc = [None] * (grid.depth + 1)
    desc[grid.depth] = mass[grid.depth]
    for level in range(grid.depth - 1, -1, -1):
        child = desc[level + 1]
        k = 1 << level
        if d == 1:
            s = child.reshape(k, 2).sum(axis=1)
        else:
            s = child.reshape(k, 2, k, 2).sum(axis=(1, 3))
        desc[level] = mass[level] + s
    return anc, desc


def proof_step_margin(family: SparseFamily, f: GridFunction, w: GridFunction) -> float:
    """Largest ``lhs - rhs`` over dyadic ``Q0`` of the packing step.

    ``lhs = <|A_S f - c|>_Q0`` with ``c`` the sum of averages over members
    containing ``Q0``; ``rhs = ||f w||_inf sum_{Q in S, Q in Q0} w^-1(Q) / |Q0|``.
    """
    grid = family.grid
    sigma = 1.0 / w
    a = sparse_apply(family, f).values
    anc, desc = _ancestor_and_descendant_sums(family, f, sigma)
    norm = float(np.max(np.abs(f.values) * w.values))
    worst = -math.inf
    for level in range(grid.depth + 1):
        k = 1 << level
        m = grid.n // k
        if grid.dim == 1:
            blocks = a.reshape(k, m) - anc[level].reshape(k, 1)
            lhs = np.abs(blocks).mean(axis=1)
        else:
            blocks = a.reshape(k, m, k, m) - anc[level].reshape(k, 1, k, 1)
            lhs = np.abs(blocks).mean(axis=(1, 3)).ravel()
        rhs = norm * desc[level].ravel() / grid.cube_volume(Cube(level, (0,) * grid.dim))
        scale = np.maximum(1.0, np.abs(rhs))
        worst = max(worst, float(np.max((lhs.ravel() - rhs) / scale)))
    return worst


def verify_wbmosparse(
    family: SparseFamily, w: GridFunction, f: GridFunction, tol: float = 1e-12, weak: bool = True
) -> list:
    """Sparse operator bounds into the four dyadic weighted BMO spaces.

    Strong bounds carry the factor 2 of the mean-versus-optimal centring and
    are otherwise exact; weak bounds use the calibrated weak-type constant.
    """
    from .bmo import INFINITY, MEAN, ONE, WEAK, BmoFlavor, bmo_norm, linf_w
    from .report import VerificationReport
    from .weights import a1_characteristic

    eta = family.eta
    sigma = 1.0 / w
    norm = linf_w(f, w)
    a = sparse_apply(family, f)
    ainf = ainfty_characteristic(sigma, Dyadic())
    a1 = a1_characteristic(sigma, Dyadic())
    rows = []

    def add(cid, anchor, lhs, bound, const, note):
        raw = lhs / bound if bound > 0 else (0.0 if lhs == 0 else math.inf)
        rows.append(
            VerificationReport.inequality(
                cid, anchor, lhs, const * bound, tol, f"{note}; constant {const:g}; raw ratio {raw:.6g}"
            )
        )

    add("sparse.bmo.one", "eq:wbmosparse1", bmo_norm(a, w, BmoFlavor(ONE, MEAN)), ainf * norm / eta,
        BMOCONST_FACTOR, "bound eta^-1 [w^-1]_Ainf ||fw||_inf")
    add("sparse.bmo.inf", "eq:wbmosparse2", bmo_norm(a, w, BmoFlavor(INFINITY, MEAN)), a1 * ainf * norm / eta,
        BMOCONST_FACTOR, "bound eta^-1 [w^-1]_A1 [w^-1]_Ainf ||fw||_inf")
    if weak:
        add("sparse.bmo.weak_one", "eq:wbmosparse3", bmo_norm(a, w, BmoFlavor(ONE, WEAK)), norm / eta,
            WEAK_SPARSE_CONSTANT, "bound eta^-1 ||fw||_inf")
        add("sparse.bmo.weak_inf", "eq:wbmosparse4", bmo_norm(a, w, BmoFlavor(INFINITY, WEAK)), a1 * norm / eta,
            WEAK_SPARSE_CONSTANT, "bound eta^-1 [w^-1]_A1 ||fw||_inf")
    margin = proof_step_margin(family, f, w)
    rows.append(
        VerificationReport.inequality(
            "sparse.bmo.packing_step", "eq:wbmosparse1", margin, tol, 0.0,
            "max over dyadic Q0 of <|A_S f - c|>_Q0 - ||fw||_inf sum_{Q in Q0} w^-1(Q)/|Q0|",
        )
    )
    return rows
