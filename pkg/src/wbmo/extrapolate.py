"""Weighted Lebesgue spaces, the Rubio de Francia majorant and the extrapolation chain."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .families import Dyadic, Flavor
from .grid import Cube, DyadicGrid, GridFunction, fsum
from .maximal import maximal, sharp_maximal, weak_sharp_maximal
from .report import VerificationReport
from .weights import Weight, a1_characteristic, identity_weight

SAFETY = 1.25


class ContractError(ValueError):
    """A precondition of an extrapolation routine does not hold."""


class InsufficientBound(RuntimeError):
    """The supplied maximal bound is smaller than some step of the orbit."""

    def __init__(self, msg: str, step: int = -1, ratio: float = math.nan):
        super().__init__(msg)
        self.step = step
        self.ratio = ratio


# ----------------------------------------------------------------------------
# spaces


@dataclass(frozen=True)
class LebesgueSpace:
    """``L^p(v)`` on the cells of a grid: ``||f|| = (int |f|^p v)^(1/p)``."""

    p: float
    v: GridFunction

    def __post_init__(self):
        if not (1.0 < self.p < math.inf):
            raise ContractError(f"exponent must lie in (1, inf), got {self.p}")
        if not np.all(self.v.values > 0):
            raise ContractError("space weight must be strictly positive")

    @classmethod
    def unweighted(cls, grid: DyadicGrid, p: float) -> "LebesgueSpace":
        return cls(p, identity_weight(grid))

    @property
    def grid(self) -> DyadicGrid:
        return self.v.grid

    @property
    def conjugate(self) -> float:
        return self.p / (self.p - 1.0)

    def associate(self) -> "LebesgueSpace":
        q = self.conjugate
        return LebesgueSpace(q, GridFunction(self.grid, self.v.values ** (1.0 - q)))

    def norm(self, f: GridFunction | np.ndarray) -> float:
        vals = f.values if isinstance(f, GridFunction) else np.asarray(f)
        s = fsum(np.abs(vals) ** self.p * self.v.values) * self.grid.cell_volume
        return float(s ** (1.0 / self.p))

    def norming(self, h: GridFunction) -> GridFunction:
        """``g`` with ``||g||_X' = 1`` and ``int h g = ||h||_X``."""
        nh = self.norm(h)
        if nh == 0:
            raise ContractError("cannot norm the zero function")
        vals = np.sign(h.values) * np.abs(h.values) ** (self.p - 1) * self.v.values / nh ** (self.p - 1)
        return GridFunction(self.grid, vals)

    def describe(self) -> dict:
        label = getattr(self.v, "label", "") or "table"
        return {"p": self.p, "weight": label}


def space_norm(f: GridFunction, X: LebesgueSpace) -> float:
    return X.norm(f)


def associate_norm(g: GridFunction, X: LebesgueSpace) -> float:
    """Closed form: the associate of ``L^p(v)`` is ``L^p'(v^(1-p'))``."""
    return X.associate().norm(g)


def pairing(f: GridFunction, g: GridFunction) -> float:
    """``||f g||_L1``."""
    return fsum(np.abs(f.values * g.values)) * f.grid.cell_volume


def associate_probe(g: GridFunction, X: LebesgueSpace, bank: Sequence[GridFunction] = ()) -> float:
    """Lower bound ``max ||f g||_1 / ||f||_X`` over ``bank`` plus the extremal function."""
    q = X.conjugate
    best = (np.abs(g.values) / X.v.values) ** (q - 1.0)
    cands = list(bank)
    if np.any(best > 0):
        cands.append(GridFunction(X.grid, best))
    out = 0.0
    for f in cands:
        nf = X.norm(f)
        if nf > 0:
            out = max(out, pairing(f, g) / nf)
    return out


# ----------------------------------------------------------------------------
# probe banks


def probe_bank(grid: DyadicGrid, rng: np.random.Generator | None = None, count: int = 6) -> list[GridFunction]:
    """Indicators of dyadic cubes, truncated power singularities and random positive data."""
    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    for level in sorted({0, 1, grid.depth // 2, grid.depth}):
        out.append(_cube_indicator(grid, Cube(level, (0,) * grid.dim)))
    r = np.sqrt(np.sum((grid.cell_centers() - np.asarray(grid.origin)) ** 2, axis=-1)) / grid.side
    for a in (0.25, 0.5, 0.9):
        out.append(GridFunction(grid, r ** (-a * grid.dim)))
    for _ in range(count):
        out.append(GridFunction(grid, rng.exponential(size=grid.shape)))
    return out


def _cube_indicator(grid: DyadicGrid, cube) -> GridFunction:
    v = np.zeros(grid.shape)
    v[grid.cube_box(cube).slices] = 1.0
    return GridFunction(grid, v)


def dual_bank(X: LebesgueSpace, extra: Sequence[GridFunction] = (), rng: np.random.Generator | None = None) -> list:
    """Functions of unit ``X'`` norm: constants, indicators, random data, plus ``extra`` rescaled."""
    Y = X.associate()
    out = []
    for h in list(probe_bank(X.grid, rng, count=3)) + list(extra) + [GridFunction(X.grid, np.ones(X.grid.shape))]:
        n = Y.norm(h)
        if n > 0:
            out.append(GridFunction(X.grid, h.values / n))
    return out


# ----------------------------------------------------------------------------
# maximal bound


def orbit(f: GridFunction, steps: int, flavor: Flavor = Dyadic()) -> list[GridFunction]:
    """``|f|, Mf, M^2 f, ..., M^steps f``."""
    out = [GridFunction(f.grid, np.abs(f.values))]
    for _ in range(steps):
        out.append(maximal(out[-1], flavor))
    return out


@dataclass
class MaximalBound:
    bound: float
    raw: float
    attempts: int
    worst: str


def _ratio(X: LebesgueSpace, f: GridFunction, flavor: Flavor, mf: GridFunction | None = None) -> float:
    nf = X.norm(f)
    if nf == 0:
        return 0.0
    mf = maximal(f, flavor) if mf is None else mf
    return X.norm(mf) / nf


def estimate_maximal_norm(
    X: LebesgueSpace, flavor: Flavor = Dyadic(), f: GridFunction | None = None, steps: int = 12,
    bank: Sequence[GridFunction] | None = None, safety: float = SAFETY, max_retries: int = 8,
) -> MaximalBound:
    """Bound for ``||M||_{X->X}``: the largest observed ratio times ``safety``.

    The bank is the stock probe bank plus the maximal orbit of ``f``.  The
    result is checked against every step of that orbit and enlarged until it
    dominates them; exceeding ``max_retries`` raises with the violating step.
    """
    bank = probe_bank(X.grid) if bank is None else list(bank)
    raw, worst = 1.0, "constant"
    for i, h in enumerate(bank):
        r = _ratio(X, h, flavor)
        if r > raw:
            raw, worst = r, f"bank[{i}]"
    b = safety * raw
    if f is None:
        return MaximalBound(b, raw, 1, worst)
    orb = orbit(f, steps, flavor)
    for attempt in range(1, max_retries + 1):
        bad = [(k, _ratio(X, orb[k], flavor, orb[k + 1])) for k in range(steps)]
        bad = [(k, r) for k, r in bad if r > b]
        if not bad:
            return MaximalBound(b, raw, attempt, worst)
        k, r = max(bad, key=lambda t: t[1])
        raw, worst = r, f"orbit[{k}]"
        b = safety * r
    raise InsufficientBound(f"bound still below orbit step {k} after {max_retries} retries", k, r)


# ----------------------------------------------------------------------------
# Rubio de Francia


@dataclass
class RdfResult:
    weight: Weight  # w, so that weight.inverse() is the majorant
    majorant: GridFunction  # w^-1 = sum_k M^k f / (2B)^k
    tail: GridFunction  # M^(K+1) f / (2B)^K
    bound: float
    order: int
    orbit_ratios: list = field(default_factory=list)


def rubio_de_francia(
    f: GridFunction, B: float, K: int = 40, flavor: Flavor = Dyadic(), X: LebesgueSpace | None = None
) -> RdfResult:
    """``w^-1 = sum_{k<=K} M^k f / (2B)^k``.

    With ``X`` given, every step of the orbit must satisfy
    ``||M^(k+1) f||_X <= B ||M^k f||_X``; otherwise ``InsufficientBound``.
    """
    if not np.all(f.values >= 0):
        raise ContractError("input must be nonnegative")
    if not np.any(f.values > 0):
        raise ContractError("input must not vanish identically")
    if not B >= 1.0:
        raise ContractError("a maximal bound is at least 1")
    orb = orbit(f, K + 1, flavor)
    ratios = []
    if X is not None:
        for k in range(K):
            r = _ratio(X, orb[k], flavor, orb[k + 1])
            ratios.append(r)
            if r > B:
                raise InsufficientBound(f"orbit step {k} has ratio {r:.6g} > {B:.6g}", k, r)
    scale = 1.0 / (2.0 * B)
    terms = np.stack([orb[k].values * scale**k for k in range(K + 1)])
    maj = np.sum(terms, axis=0)
    tail = orb[K + 1].values * scale**K
    majorant = GridFunction(f.grid, maj)
    w = Weight(f.grid, 1.0 / maj, "rdf")
    return RdfResult(w, majorant, GridFunction(f.grid, tail), B, K, ratios)


def check_rdf(
    res: RdfResult, f: GridFunction, X: LebesgueSpace, g: GridFunction | None = None,
    flavor: Flavor = Dyadic(), tol: float = 1e-12,
) -> list[VerificationReport]:
    """The three postconditions of the majorant and the pairing bound."""
    maj, B = res.majorant.values, res.bound
    out = []
    dom = float(np.max(np.abs(f.values) / maj))
    out.append(VerificationReport.inequality("rdf.dominates", "lem:rdf", dom, 1.0, tol, "max |f| / w^-1"))
    m = maximal(res.majorant, flavor).values
    excess = float(np.max((m - 2 * B * maj - res.tail.values) / maj))
    slack = float(np.max(res.tail.values / maj))
    out.append(
        VerificationReport.inequality(
            "rdf.a1", "lem:rdf", 1.0 + excess / (2 * B), 1.0, tol,
            f"max (M w^-1 - tail) / (2B w^-1); truncation slack {slack:.3g} relative to w^-1",
        )
    )
    nf = X.norm(f)
    out.append(VerificationReport.inequality("rdf.norm", "lem:rdf", X.norm(res.majorant), 2 * nf, tol, "||w^-1||_X"))
    if g is None:
        g = GridFunction(f.grid, np.ones(f.grid.shape))
    lhs = float(np.max(np.abs(f.values) * res.weight.values)) * pairing(g, res.majorant)
    rhs = 2.0 * nf * associate_norm(g, X)
    out.append(VerificationReport.inequality("rdf.pairing", "lem:rdf", lhs, rhs, tol, "||f||_Linf_w ||g||_L1_w^-1"))
    return out


def certified_rdf(
    f: GridFunction, X: LebesgueSpace, K: int = 40, flavor: Flavor = Dyadic(), max_retries: int = 8
) -> RdfResult:
    """Estimate the maximal bound, build the majorant, and enlarge the bound on failure."""
    mb = estimate_maximal_norm(X, flavor, f, steps=min(K, 12))
    b = mb.bound
    for _ in range(max_retries):
        try:
            return rubio_de_francia(f, b, K, flavor, X)
        except InsufficientBound as e:
            b = SAFETY * e.ratio
    raise InsufficientBound("retry cap exceeded")


# ----------------------------------------------------------------------------
# Fefferman-Stein probe


@dataclass
class FeffermanSteinProbe:
    c_x: float
    c_x_weak: float
    used: int
    skipped: int
    notes: list = field(default_factory=list)

    @property
    def ordered(self) -> bool:
        return self.c_x <= self.c_x_weak * (1 + 1e-12)


def fefferman_stein_probe(
    X: LebesgueSpace, bank: Sequence[GridFunction], flavor: Flavor = Dyadic()
) -> FeffermanSteinProbe:
    """Largest ``||f||_X / ||M^# f||_X`` and its weak analogue over the bank."""
    if not bank:
        raise ContractError("probe bank is empty")
    c = cw = 0.0
    used = skipped = 0
    notes = []
    for i, f in enumerate(bank):
        s = X.norm(sharp_maximal(f, flavor))
        nf = X.norm(f)
        if s == 0 or nf == 0:
            skipped += 1
            notes.append(f"bank[{i}] skipped: zero sharp maximal function")
            continue
        sw = X.norm(weak_sharp_maximal(f, flavor))
        used += 1
        c = max(c, nf / s)
        cw = max(cw, nf / sw)
    return FeffermanSteinProbe(c, cw, used, skipped, notes)


# ----------------------------------------------------------------------------
# extrapolation chain


@dataclass
class ExtrapolationConfig:
    phi: Callable[[float], float]
    maximal_bound: float | None = None
    truncation_order: int = 40

    def check_phi(self, ts: Sequence[float] = (1.0, 1.5, 2.0, 4.0, 8.0, 32.0)) -> bool:
        vals = [self.phi(t) for t in ts]
        return all(a > 0 for a in vals) and all(a <= b for a, b in zip(vals, vals[1:]))


def sparse_phi(eta: float, const: float = 2.0) -> Callable[[float], float]:
    """``phi(t) = const eta^-1 t^2``, the verified sparse bound with ``[w^-1]_Ainf <= [w^-1]_A1``."""
    return lambda t: const / eta * t * t


@dataclass
class ExtrapolationResult:
    reports: list
    chain: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_json(self) -> str:
        return json.dumps({"chain": self.chain, "reports": [r.to_dict() for r in self.reports]}, indent=2)


def extrapolation_demo(
    T: Callable[[GridFunction], GridFunction], X: LebesgueSpace, cfg: ExtrapolationConfig, f: GridFunction,
    flavor: Flavor = Dyadic(), dual: Sequence[GridFunction] | None = None, tag: str = "", tol: float = 1e-10,
) -> ExtrapolationResult:
    """Run the extrapolation proof on one input and record every quantity.

    Steps: bound ``||M||_X``, build ``w^-1`` from ``f``, check the hypothesis
    ``||Tf||_BMOinf_w <= phi([w^-1]_A1) ||f||_Linf_w``, pair ``M^#(Tf)`` against
    a unit-norm dual bank, and close with the probe constant ``C_X`` of ``Tf``.
    """
    if not cfg.check_phi():
        raise ContractError("phi must be positive and increasing")
    pre = f"extrap{('.' + tag) if tag else ''}"
    chain, reports = [], []

    def step(name, anchor, value, bound=None):
        chain.append({"quantity": name, "anchor": anchor, "value": float(value),
                      "bound": None if bound is None else float(bound),
                      "slack": None if bound is None else float(bound - value)})

    nf = X.norm(f)
    step("||f||_X", "thm:sharpbmoextrap", nf)
    tf = T(f)
    if nf == 0:
        ntf = X.norm(tf)
        step("||Tf||_X", "thm:sharpbmoextrap", ntf, 0.0)
        reports.append(VerificationReport.inequality(pre + ".final", "thm:sharpbmoextrap", ntf, 0.0, tol))
        return ExtrapolationResult(reports, chain)

    if cfg.maximal_bound is None:
        res = certified_rdf(f, X, cfg.truncation_order, flavor)
    else:
        res = rubio_de_francia(f, cfg.maximal_bound, cfg.truncation_order, flavor, X)
    B = res.bound
    step("B", "lem:rdf", B)
    for r in check_rdf(res, f, X, flavor=flavor, tol=tol):
        r.check_id = f"{pre}.{r.check_id}"
        reports.append(r)
    w = res.weight
    a1 = a1_characteristic(res.majorant, flavor)
    step("[w^-1]_A1", "lem:rdf", a1, 2 * B)
    t_star = max(2 * B, a1)
    phi = cfg.phi(t_star)
    step("phi(2B)", "thm:sharpbmoextrap", phi)

    fw = float(np.max(np.abs(f.values) * w.values))
    ms = sharp_maximal(tf, flavor)
    hyp = float(np.max(ms.values * w.values))
    step("||Tf||_BMOinf_w", "eq:wbmosparse2", hyp, cfg.phi(a1) * fw)
    reports.append(
        VerificationReport.inequality(
            pre + ".hypothesis", "eq:wbmosparse2", hyp, cfg.phi(a1) * fw, tol, "||M# Tf||_Linf_w vs phi([w^-1]_A1)||f||_Linf_w"
        )
    )

    bound = 2 * phi * nf
    bank = list(dual) if dual is not None else dual_bank(X)
    if np.any(ms.values != 0):
        bank.append(X.norming(ms))
    worst = 0.0
    for g in bank:
        worst = max(worst, pairing(ms, g) / associate_norm(g, X))
    step("sup_g ||M#(Tf) g||_1", "thm:sharpbmoextrap", worst, bound)
    reports.append(
        VerificationReport.inequality(pre + ".pairing", "thm:sharpbmoextrap", worst, bound, tol, f"{len(bank)} dual functions")
    )

    ntf, nms = X.norm(tf), X.norm(ms)
    c_x = ntf / nms if nms > 0 else 0.0
    step("C_X(Tf)", "thm:fefsteinbfs", c_x)
    step("||Tf||_X", "thm:sharpbmoextrap", ntf, 2 * c_x * phi * nf)
    reports.append(
        VerificationReport.inequality(
            pre + ".final", "thm:sharpbmoextrap", ntf, 2 * c_x * phi * nf, tol, f"C_X {c_x:.6g}; B {B:.6g}"
        )
    )
    return ExtrapolationResult(reports, chain)


def chain_json(result: ExtrapolationResult, X: LebesgueSpace) -> dict:
    return {"space": X.describe(), "chain": result.chain, "reports": [r.to_dict() for r in result.reports]}


__all__ = [
    "LebesgueSpace",
    "ContractError",
    "InsufficientBound",
    "space_norm",
    "associate_norm",
    "associate_probe",
    "pairing",
    "probe_bank",
    "dual_bank",
    "orbit",
    "MaximalBound",
    "estimate_maximal_norm",
    "RdfResult",
    "rubio_de_francia",
    "check_rdf",
    "certified_rdf",
    "FeffermanSteinProbe",
    "fefferman_stein_probe",
    "ExtrapolationConfig",
    "ExtrapolationResult",
    "sparse_phi",
    "extrapolation_demo",
    "chain_json",
]
