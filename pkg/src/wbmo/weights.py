"""Weight characteristics, moduli of continuity and stock weight families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .families import (
    BoxBatch,
    Dyadic,
    Flavor,
    Full1D,
    LocalizedDyadic,
    PrefixTable,
    RangeMax,
    ShiftedDyadic,
    batches,
    box_max,
    sup_over_family,
)
from .grid import Cube, DyadicGrid, GridError, GridFunction
from .maximal import maximal


@dataclass(frozen=True)
class Weight(GridFunction):
    """Strictly positive grid function, optionally tagged as a power weight."""

    label: str = ""
    power: float | None = None
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        super().__post_init__()
        if not np.all(self.values > 0):
            raise GridError(f"weight {self.label or ''} must be strictly positive")

    @classmethod
    def of(cls, f: GridFunction, label: str = "") -> "Weight":
        return cls(f.grid, f.values, label)

    def inverse(self) -> "Weight":
        power = None if self.power is None else -self.power
        label = f"1/({self.label})" if self.label else ""
        return Weight(self.grid, 1.0 / self.values, label, power, self.center)

    def scaled(self, c: float) -> "Weight":
        return Weight(self.grid, c * self.values, self.label, self.power, self.center)


# ----------------------------------------------------------------------------
# stock weights


def _anchor(grid: DyadicGrid) -> tuple[float, ...]:
    out = []
    for o in grid.origin:
        out.append(0.0 if o <= 0.0 <= o + grid.side else o + grid.side / 2)
    return tuple(out)


def _radius(grid: DyadicGrid, center: tuple[float, ...], sup_norm: bool = False) -> np.ndarray:
    c = grid.cell_centers() - np.asarray(center)
    if sup_norm:
        return np.max(np.abs(c), axis=-1)
    return np.sqrt(np.sum(c**2, axis=-1))


def power_weight(grid: DyadicGrid, delta: float, center=None) -> Weight:
    """Midpoint samples of ``|x - center|^delta``."""
    center = _anchor(grid) if center is None else tuple(np.atleast_1d(center).astype(float))
    r = _radius(grid, center)
    return Weight(grid, r**delta, f"|x|^{delta:g}", float(delta), center)


def identity_weight(grid: DyadicGrid) -> Weight:
    return Weight(grid, np.ones(grid.shape), "identity", 0.0, _anchor(grid))


def step_weight(grid: DyadicGrid, high: float = 2.0, low: float = 1.0) -> Weight:
    v = np.full(grid.shape, low)
    half = grid.n // 2
    v[(slice(0, half),) * grid.dim] = high
    return Weight(grid, v, f"step({high:g},{low:g})")


def lacunary_weight(grid: DyadicGrid, center=None) -> Weight:
    """``2^-k`` on the k-th dyadic shell around ``center``."""
    center = _anchor(grid) if center is None else tuple(np.atleast_1d(center).astype(float))
    r = _radius(grid, center, sup_norm=True) / grid.side
    k = np.clip(np.floor(-np.log2(np.maximum(r, 1e-300))), 0, grid.depth + 1)
    return Weight(grid, 2.0**-k, "lacunary")


STOCK_POWERS = (-0.75, -0.5, -0.25, 0.25, 0.5)


def stock_weights(grid: DyadicGrid) -> list[Weight]:
    out = [identity_weight(grid), step_weight(grid)]
    out += [power_weight(grid, d) for d in STOCK_POWERS]
    out.append(lacunary_weight(grid))
    return out


def make_weight(grid: DyadicGrid, config: dict) -> Weight:
    """Build a weight from a JSON-style description (``kind`` plus parameters)."""
    kind = config.get("kind", "identity")
    if kind == "identity":
        return identity_weight(grid)
    if kind == "power":
        return power_weight(grid, float(config["delta"]), config.get("center"))
    if kind == "step":
        if "breaks" not in config:
            return step_weight(grid, config.get("high", 2.0), config.get("low", 1.0))
        if grid.dim != 1:
            raise GridError("step weights with breakpoints are one-dimensional")
        x = grid.axis_centers()
        vals = np.asarray(config["values"], dtype=float)
        idx = np.searchsorted(np.asarray(config["breaks"], dtype=float), x, side="right")
        return Weight(grid, vals[idx], config.get("label", "step"))
    if kind == "table":
        return Weight(grid, np.asarray(config["values"], dtype=float), config.get("label", "table"))
    if kind == "lacunary":
        return lacunary_weight(grid, config.get("center"))
    raise ValueError(f"unknown weight kind {kind!r}")


# ----------------------------------------------------------------------------
# Muckenhoupt-type characteristics


def _min_table(w: GridFunction):
    return RangeMax(-w.values) if w.grid.dim == 1 else None


def _box_min(w: GridFunction, b: BoxBatch, table) -> np.ndarray:
    return -box_max(-w.values, b, table)


def a1_characteristic(w: GridFunction, flavor: Flavor = Dyadic(), form: str = "sup") -> float:
    """``[w]_A1``, either as ``sup_Q <w>_Q / inf_Q w`` or as ``||(Mw)/w||_inf``."""
    if form == "maximal":
        return float(np.max(maximal(w, flavor).values / w.values))
    if form != "sup":
        raise ValueError("form must be 'sup' or 'maximal'")
    table = PrefixTable(w.values)
    mins = _min_table(w)

    def stat(b):
        return table.box_sums(b) / b.cells / _box_min(w, b, mins)

    return sup_over_family(w.grid, flavor, stat)[0]


def ap_characteristic(w: GridFunction, p: float, flavor: Flavor = Dyadic()) -> float:
    """``[w]_Ap = sup_Q <w>_Q <w^(-1/(p-1))>_Q^(p-1)``."""
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    t1 = PrefixTable(w.values)
    t2 = PrefixTable(w.values ** (-1.0 / (p - 1.0)))

    def stat(b):
        return (t1.box_sums(b) / b.cells) * (t2.box_sums(b) / b.cells) ** (p - 1.0)

    return sup_over_family(w.grid, flavor, stat)[0]


def _localized_dyadic_integrals(blocks: np.ndarray, dim: int) -> np.ndarray:
    """``sum_Q M^{D(Q)} w`` in cell units for blocks of shape ``(B,) + (m,)*dim``."""
    b = blocks.shape[0]
    m = blocks.shape[1]
    best = blocks.copy()
    s = 2
    while s <= m:
        if dim == 1:
            avg = blocks.reshape(b, m // s, s).mean(axis=2)
            up = np.repeat(avg, s, axis=1)
        else:
            avg = blocks.reshape(b, m // s, s, m // s, s).mean(axis=(2, 4))
            up = np.repeat(np.repeat(avg, s, axis=1), s, axis=2)
        np.maximum(best, up, out=best)
        s *= 2
    return best.reshape(b, -1).sum(axis=1)


def _full_localized_integral_1d(seg: np.ndarray) -> float:
    m = len(seg)
    p = np.concatenate([[0.0], np.cumsum(seg.astype(np.longdouble))])
    i, j = np.triu_indices(m + 1, k=1)
    means = ((p[j] - p[i]) / (j - i)).astype(float)
    table = np.full((m, m + 1), -np.inf)
    table[i, j] = means
    suffix = np.maximum.accumulate(table[:, ::-1], axis=1)[:, ::-1][:, 1:]
    suffix = np.where(np.tri(m, m, dtype=bool).T, suffix, -np.inf)
    return float(suffix.max(axis=0).sum())


def ainfty_characteristic(w: GridFunction, flavor: Flavor = Dyadic()) -> float:
    """Fujii-Wilson constant ``sup_Q w(Q)^-1 int_Q M^{D(Q)} w``.

    For ``Full1D`` the localized operator is the full maximal function of
    ``1_Q w``; that path is quartic in the number of cells.
    """
    grid = w.grid
    v = w.values
    if isinstance(flavor, Full1D):
        if grid.dim != 1:
            raise GridError("Full1D needs a one-dimensional grid")
        best = 1.0
        p = np.concatenate([[0.0], np.cumsum(v)])
        n = grid.n
        for a in range(n):
            for b in range(a + 1, n + 1):
                mass = p[b] - p[a]
                best = max(best, _full_localized_integral_1d(v[a:b]) / mass)
        return best
    best = 0.0
    for b in batches(grid, flavor):
        blocks = b.windows(v).reshape((len(b),) + b.shape)
        num = _localized_dyadic_integrals(blocks, grid.dim)
        den = blocks.reshape(len(b), -1).sum(axis=1)
        best = max(best, float(np.max(num / den)))
    return best


# ----------------------------------------------------------------------------
# moduli of continuity


@dataclass(frozen=True)
class Power:
    """``Omega(t) = t^alpha``."""

    alpha: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("power modulus needs alpha in (0, 1]")

    def __call__(self, t):
        return np.asarray(t, dtype=float) ** self.alpha


@dataclass(frozen=True)
class Scaled:
    c: float
    inner: "Modulus"

    def __call__(self, t):
        return self.c * self.inner(t)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear modulus through ``(0, 0)`` and the given samples."""

    ts: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.ts)
        vs = tuple(float(v) for v in self.values)
        if len(ts) != len(vs) or not all(b > a for a, b in zip(ts, ts[1:])) or ts[0] <= 0:
            raise ValueError("tabulated modulus needs increasing positive abscissae")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "values", vs)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        xs = np.concatenate([[0.0], self.ts])
        ys = np.concatenate([[0.0], self.values])
        inside = np.interp(t, xs, ys)
        return np.where(t > xs[-1], ys[-1] * t / xs[-1], inside)


Modulus = Power | Scaled | Tabulated


def check_modulus(omega: Callable, ts: np.ndarray | None = None, tol: float = 1e-12) -> list[str]:
    """Spot-check monotonicity, subadditivity and ``Omega(0) = 0``; returns problems found."""
    ts = np.linspace(0.0, 2.0, 201) if ts is None else np.asarray(ts, dtype=float)
    v = np.asarray(omega(ts), dtype=float)
    problems = []
    if abs(float(np.asarray(omega(0.0)))) > tol:
        problems.append("Omega(0) != 0")
    if np.any(np.diff(v) < -tol):
        problems.append("not increasing")
    s = ts[:, None] + ts[None, :]
    lhs = np.asarray(omega(s), dtype=float)
    if np.any(lhs > v[:, None] + v[None, :] + tol):
        problems.append("not subadditive")
    return problems


DIVERGENCE_CAP = 1e12


def dini_integral(omega: Callable, beta: float = 0.0) -> float:
    """``int_0^1 Omega(t) t^-beta dt/t``; ``inf`` when it diverges."""
    if isinstance(omega, Power):
        return 1.0 / (omega.alpha - beta) if omega.alpha > beta else math.inf
    if isinstance(omega, Scaled):
        return omega.c * dini_integral(omega.inner, beta)

    def integrand(u):
        return float(omega(math.exp(u))) * math.exp(-beta * u)

    total, a = 0.0, 0.0
    while a > -5000.0:
        piece, _ = integrate.quad(integrand, a - 10.0, a, epsabs=0.0, epsrel=1e-13, limit=200)
        total += piece
        if total > DIVERGENCE_CAP:
            return math.inf
        if piece <= 1e-14 * total:
            return total
        a -= 10.0
    return math.inf


def dini_norm(omega: Callable) -> float:
    """``||Omega||_Dini = int_0^1 Omega(t) dt/t``."""
    return dini_integral(omega, 0.0)


def _power_params(omega) -> tuple[float, float] | None:
    if isinstance(omega, Power):
        return 1.0, omega.alpha
    if isinstance(omega, Scaled):
        inner = _power_params(omega.inner)
        if inner is not None:
            return omega.c * inner[0], inner[1]
    return None


@dataclass
class BOmegaResult:
    value: float  # truncated supremum over admissible dyadic cubes
    annulus_bound: float  # shell-sum upper bound, same truncation
    upper: float  # value with an analytic bound for the part outside the root
    cube: Cube | None
    cubes_used: int
    skipped: int
    truncation_radius: float
    notes: list[str] = field(default_factory=list)


def _tail_bound(w: Weight, omega, center: np.ndarray, ell: float) -> float:
    """Bound for the part of the B(Omega) integral outside the root (1-D power weights)."""
    params = _power_params(omega)
    grid = w.grid
    if grid.dim != 1 or params is None or w.power is None or w.center is None:
        return math.inf
    c, alpha = params
    delta = w.power
    lo, hi = grid.origin[0], grid.origin[0] + grid.side
    x0 = w.center[0]
    total = 0.0
    for dist in (center[0] - lo, hi - center[0]):
        if delta >= 0:
            if alpha <= delta:
                return math.inf
            kappa = 1.0 + abs(center[0] - x0) / dist
            total += kappa**delta * c * ell**alpha * dist ** (delta - alpha) / (alpha - delta)
        else:
            d0 = min(x0 - lo, hi - x0)
            if d0 <= 0:
                return math.inf
            total += d0**delta * c * ell**alpha * dist ** (-alpha) / alpha
    return total


def b_omega_characteristic(
    w: GridFunction, omega: Callable, refine: int = 4, chunk: int = 1 << 22
) -> BOmegaResult:
    """``[w]_B(Omega)`` over dyadic cubes ``Q`` with ``2Q`` inside the root.

    The complement integral is truncated to the root and evaluated with
    ``refine`` midpoint sub-samples per cell and axis.
    """
    grid = w.grid
    d = grid.dim
    h = grid.h
    sub = (np.arange(refine) + 0.5) / refine  # fractions inside a cell
    if d == 1:
        pts = (grid.axis_edges()[:-1, None] + h * sub[None, :]).ravel()[:, None]
        cell_of = np.repeat(np.arange(grid.n), refine)[:, None]
        wv = np.repeat(w.values, refine)
    else:
        ax = (grid.axis_edges()[:-1, None] + h * sub[None, :]).ravel()
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], -1)
        ci = np.repeat(np.arange(grid.n), refine)
        CI, CJ = np.meshgrid(ci, ci, indexing="ij")
        cell_of = np.stack([CI.ravel(), CJ.ravel()], -1)
        wv = np.repeat(np.repeat(w.values, refine, axis=0), refine, axis=1).ravel()
    qw = wv * (h / refine) ** d
    table = PrefixTable(w.values)
    best, best_upper, best_ann, best_cube = 0.0, 0.0, 0.0, None
    used = skipped = 0
    radius = 0.0
    notes: list[str] = []
    root_lo = np.asarray(grid.origin)
    root_hi = root_lo + grid.side
    for level in range(grid.depth + 1):
        k = 1 << level
        m = grid.n // k
        idx = np.indices((k,) * d).reshape(d, -1).T
        ok = np.all((idx >= 1) & (idx <= k - 2), axis=1)
        skipped += int(np.count_nonzero(~ok))
        idx = idx[ok]
        if len(idx) == 0:
            continue
        ell = grid.side / k
        centers = root_lo + (idx + 0.5) * ell
        starts = idx * m
        masses = table.box_sums(BoxBatch(starts, (m,) * d)) * grid.cell_volume
        step = max(1, chunk // len(pts))
        for a in range(0, len(idx), step):
            cs = centers[a : a + step]
            st = starts[a : a + step]
            r = np.sqrt(((pts[None, :, :] - cs[:, None, :]) ** 2).sum(-1))
            inside = np.all(
                (cell_of[None, :, :] >= st[:, None, :]) & (cell_of[None, :, :] < st[:, None, :] + m),
                axis=-1,
            )
            r_safe = np.where(inside, 1.0, r)
            vals = np.where(inside, 0.0, qw[None, :] * np.asarray(omega(ell / r_safe)) / r_safe**d)
            direct = vals.sum(axis=1)
            qmass = masses[a : a + step]
            ratio = direct * ell**d / qmass
            used += len(cs)
            for i in range(len(cs)):
                ann = _annulus_sum(table, grid, omega, cs[i], ell) * ell**d / qmass[i]
                tail = _tail_bound(w, omega, cs[i], ell) if isinstance(w, Weight) else math.inf
                up = ratio[i] + tail * ell**d / qmass[i]
                dist = float(np.min(np.concatenate([cs[i] - root_lo, root_hi - cs[i]])))
                if ratio[i] > best:
                    best, best_cube = float(ratio[i]), Cube(level, tuple(int(x) for x in idx[a + i]))
                    radius = dist
                best_ann = max(best_ann, float(ann))
                best_upper = max(best_upper, float(up))
    if best_cube is None:
        notes.append("no cube has its double inside the root")
    if not math.isfinite(best_upper):
        notes.append("no analytic tail bound for this weight/modulus; upper is infinite")
    return BOmegaResult(best, best_ann, best_upper, best_cube, used, skipped, radius, notes)


def _annulus_sum(table: PrefixTable, grid: DyadicGrid, omega, center: np.ndarray, ell: float) -> float:
    """Shell-sum bound ``sum_m Omega(2^-m) (2^m l)^-d w(2^(m+2) Q)`` restricted to the root."""
    d = grid.dim
    lo = np.asarray(grid.origin)
    hi = lo + grid.side
    far = float(np.sqrt(np.sum(np.maximum(np.abs(center - lo), np.abs(hi - center)) ** 2)))
    total = 0.0
    m = 0
    while (2.0**m) * ell <= far:
        half = 2.0 ** (m + 1) * ell
        a = np.floor((center - half - lo) / grid.h).astype(int)
        b = np.ceil((center + half - lo) / grid.h).astype(int)
        a = np.clip(a, 0, grid.n)
        b = np.clip(b, 0, grid.n)
        if np.all(b > a):
            box = BoxBatch(a[None, :], tuple(int(x) for x in (b - a)))
            mass = float(table.box_sums(box)[0]) * grid.cell_volume
            total += float(omega(2.0**-m)) * mass / (2.0**m * ell) ** d
        m += 1
    return total


def embedding_constant(d: int, p: float) -> float:
    """Constant assembled from the shell decomposition for the A_p -> B(Omega) bound.

    Shell sum ``2^(2d) [w]_Ap 2^(2 beta) sum_m Omega(2^-m) 2^(m beta)`` with
    ``beta = d(p-1)``, and ``sum_m Omega(2^-m) 2^(m beta) <= (2 + 2^beta)/ln 2``
    times the integral ``int_0^1 Omega(t) t^-beta dt/t``.
    """
    beta = d * (p - 1.0)
    return 2.0 ** (2 * d) * 2.0 ** (2 * beta) * (2.0 + 2.0**beta) / math.log(2.0)


def check_embedding(
    w: Weight, omega: Callable, p: float, flavor: Flavor | None = None, tol: float = 1e-12
):
    """``[w]_B(Omega) <= C [w]_Ap int_0^1 Omega(t) t^(-d(p-1)) dt/t``; skipped when the integral diverges."""
    from .report import VerificationReport

    d = w.grid.dim
    flavor = (Full1D() if d == 1 else Dyadic()) if flavor is None else flavor
    beta = d * (p - 1.0)
    integral = dini_integral(omega, beta)
    cid = f"weights.embedding.{w.label or 'w'}.p{p:g}"
    if not math.isfinite(integral):
        return VerificationReport.skipped(cid, "czo:embedding", notes=f"integral diverges for beta {beta:g}")
    ap = ap_characteristic(w, p, flavor)
    b = b_omega_characteristic(w, omega)
    lhs = b.upper if math.isfinite(b.upper) else b.value
    c = embedding_constant(d, p)
    note = f"constant {c:.6g}; [w]_Ap {ap:.6g}; integral {integral:.6g}"
    if not math.isfinite(b.upper):
        note += "; no tail bound, truncated value used"
    return VerificationReport.inequality(cid, "czo:embedding", lhs, c * ap * integral, tol, note)


__all__ = [
    "Weight",
    "identity_weight",
    "power_weight",
    "step_weight",
    "lacunary_weight",
    "stock_weights",
    "make_weight",
    "a1_characteristic",
    "ap_characteristic",
    "ainfty_characteristic",
    "Power",
    "Scaled",
    "Tabulated",
    "check_modulus",
    "dini_integral",
    "dini_norm",
    "b_omega_characteristic",
    "BOmegaResult",
    "embedding_constant",
    "check_embedding",
    "Dyadic",
    "Full1D",
    "ShiftedDyadic",
    "LocalizedDyadic",
]
