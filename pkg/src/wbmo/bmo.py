"""Weighted BMO norms (strong and weak, two normalizations) and their relations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .families import BoxBatch, Dyadic, Flavor, PrefixTable, RangeMax, box_max
from .grid import GridFunction
from .maximal import (
    family_oscillations,
    john_stromberg_band,
    sharp_maximal,
    weak_sharp_maximal,
)
from .report import VerificationReport
from .weights import a1_characteristic

ONE, INFINITY = "one", "infinity"
MEAN, OPTIMAL, WEAK = "mean", "optimal", "weak"


@dataclass(frozen=True)
class BmoFlavor:
    """``integrability`` picks the normalization, ``centre`` the oscillation.

    ``centre="mean"`` subtracts ``<f>_Q``; ``"optimal"`` takes ``inf_c <|f - c|>_Q``;
    ``"weak"`` takes ``inf_c |Q|^-1 ||(f - c) 1_Q||_{L^{1,inf}}``.
    """

    integrability: str = ONE
    centre: str = MEAN
    family: Flavor = Dyadic()

    def __post_init__(self):
        if self.integrability not in (ONE, INFINITY):
            raise ValueError(f"integrability must be {ONE!r} or {INFINITY!r}")
        if self.centre not in (MEAN, OPTIMAL, WEAK):
            raise ValueError("centre must be 'mean', 'optimal' or 'weak'")


class _Normalizer:
    def __init__(self, w: GridFunction | None, integrability: str):
        self.kind = integrability
        if w is None:
            self.table = None
            return
        if integrability == ONE:
            self.table = PrefixTable(1.0 / w.values)
        else:
            self.values = w.values
            self.table = RangeMax(w.values) if w.values.ndim == 1 else None

    def factor(self, b: BoxBatch) -> np.ndarray:
        """Multiplier turning an oscillation into the normed quantity."""
        if self.kind == ONE:
            if self.table is None:
                return np.ones(len(b))
            return b.cells / self.table.box_sums(b)
        if not hasattr(self, "values"):
            return np.ones(len(b))
        return box_max(self.values, b, self.table)


def per_box(f: GridFunction, w: GridFunction | None, flavor: BmoFlavor):
    """Yield ``(batch, normed oscillation per box)`` over the family."""
    norm = _Normalizer(w, flavor.integrability)
    for b, osc in zip(*family_oscillations(f, flavor.family, flavor.centre)):
        yield b, osc * norm.factor(b)


def bmo_norm(f: GridFunction, w: GridFunction | None = None, flavor: BmoFlavor = BmoFlavor()) -> float:
    """Weighted BMO norm of ``f``; ``w=None`` means the unweighted norm."""
    best = 0.0
    for _, vals in per_box(f, w, flavor):
        if len(vals):
            best = max(best, float(vals.max()))
    return best


def linf_w(f: GridFunction, w: GridFunction | None = None) -> float:
    """``||f w||_inf``."""
    v = np.abs(f.values) if w is None else np.abs(f.values) * w.values
    return float(v.max())


# ----------------------------------------------------------------------------
# checks


def check_inclusions(
    f: GridFunction, w: GridFunction, family: Flavor = Dyadic(), tol: float = 1e-12, weak: bool = True
) -> list[VerificationReport]:
    a1 = a1_characteristic(1.0 / w, family)
    s1 = bmo_norm(f, w, BmoFlavor(ONE, MEAN, family))
    sinf = bmo_norm(f, w, BmoFlavor(INFINITY, MEAN, family))
    out = [
        VerificationReport.inequality("bmo.inclusion.inf_by_one", "eq:bmoinclusiona1", sinf, a1 * s1, tol),
        VerificationReport.inequality("bmo.inclusion.one_by_inf", "sec:wBMO", s1, sinf, tol),
        VerificationReport.inequality("bmo.inclusion.one_by_linf", "sec:wBMO", s1, 2 * linf_w(f, w), tol),
    ]
    if weak:
        w1 = bmo_norm(f, w, BmoFlavor(ONE, WEAK, family))
        winf = bmo_norm(f, w, BmoFlavor(INFINITY, WEAK, family))
        out += [
            VerificationReport.inequality("bmo.inclusion.weak_inf_by_one", "eq:bmoinclusiona12", winf, a1 * w1, tol),
            VerificationReport.inequality("bmo.inclusion.weak_one_by_inf", "sec:wBMO", w1, winf, tol),
        ]
    return out


def check_bmoconst(
    f: GridFunction, w: GridFunction, family: Flavor = Dyadic(), tol: float = 1e-12
) -> list[VerificationReport]:
    """Per cube and at the supremum: ``inf_c`` form <= mean form <= 2 ``inf_c`` form."""
    out = []
    for integ in (ONE, INFINITY):
        mean_sup = opt_sup = 0.0
        worst_upper = worst_lower = 0.0
        for (b, mean), (_, opt) in zip(
            per_box(f, w, BmoFlavor(integ, MEAN, family)), per_box(f, w, BmoFlavor(integ, OPTIMAL, family))
        ):
            if not len(mean):
                continue
            mean_sup = max(mean_sup, float(mean.max()))
            opt_sup = max(opt_sup, float(opt.max()))
            pos = mean > 0
            if pos.any():
                worst_upper = max(worst_upper, float(np.max(mean[pos] / (2 * opt[pos]))))
                worst_lower = max(worst_lower, float(np.max(opt[pos] / mean[pos])))
            if np.any(opt[~pos] > 0):
                worst_lower = math.inf
        tag = f"bmo.bmoconst.{integ}"
        out += [
            VerificationReport.inequality(tag + ".lower", "prop:bmoconst", opt_sup, mean_sup, tol),
            VerificationReport.inequality(tag + ".upper", "prop:bmoconst", mean_sup, 2 * opt_sup, tol),
            VerificationReport.inequality(
                tag + ".per_cube", "prop:bmoconst", max(worst_upper, worst_lower), 1.0, tol,
                "largest of mean/(2 inf_c) and inf_c/mean over cubes",
            ),
        ]
    return out


def check_msharp_identity(
    f: GridFunction, w: GridFunction, family: Flavor = Dyadic(), tol: float = 1e-12, weak: bool = True
) -> list[VerificationReport]:
    s = bmo_norm(f, w, BmoFlavor(INFINITY, MEAN, family))
    ms = float(np.max(sharp_maximal(f, family).values * w.values))
    out = [VerificationReport.identity("bmo.msharp.strong", "prop:msharpbmow", s, ms, tol)]
    if weak:
        sw = bmo_norm(f, w, BmoFlavor(INFINITY, WEAK, family))
        msw = float(np.max(weak_sharp_maximal(f, family).values * w.values))
        out.append(VerificationReport.identity("bmo.msharp.weak", "prop:msharpbmow", sw, msw, tol))
    return out


def weak_strong_constant(d: int) -> float:
    """``4 lam^-1 eta^-1`` with ``lam = 2^(-d-2)`` and ``eta = 1/2``.

    Dominating ``|f - m_Q0|`` by a half-sparse sum of median oscillations,
    bounding each by ``lam^-1`` times the weak oscillation and summing over
    the disjoint sets ``E_Q`` gives
    ``<|f - <f>|>_Q0 <= 4 lam^-1 eta^-1 ||f||_wk <w^-1>_Q0``; the factor
    ``<w^-1>_Q0 max_Q0 w`` is at most ``[w^-1]_A1``.
    """
    return 4.0 * 2.0 ** (d + 2) * 2.0


def check_weak_strong_equivalence(
    f: GridFunction, w: GridFunction, tol: float = 1e-12
) -> VerificationReport:
    """Dyadic strong BMO-infinity norm against ``[w^-1]_A1`` times the weak one."""
    a1 = a1_characteristic(1.0 / w)
    strong = bmo_norm(f, w, BmoFlavor(INFINITY, MEAN))
    weak = bmo_norm(f, w, BmoFlavor(INFINITY, WEAK))
    c = weak_strong_constant(f.grid.dim)
    r = VerificationReport.inequality(
        "bmo.weak_strong", "sec:wBMO:weak-strong", strong, c * a1 * weak, tol,
        f"constant {c:g}; strong/(A1*weak) = {strong / (a1 * weak) if weak > 0 else 0.0:.6g}",
    )
    return r


def john_stromberg_report(fs: list[GridFunction], family: Flavor = Dyadic(), lam: float | None = None) -> dict:
    """Observed band of ``M^# f / M(M^#_lam f)``; informational only."""
    if lam is None:
        lam = 2.0 ** (-fs[0].grid.dim - 2)
    return john_stromberg_band(fs, family, lam)


__all__ = [
    "BmoFlavor",
    "bmo_norm",
    "linf_w",
    "per_box",
    "check_inclusions",
    "check_bmoconst",
    "check_msharp_identity",
    "check_weak_strong_equivalence",
    "weak_strong_constant",
    "john_stromberg_report",
    "ONE",
    "INFINITY",
    "MEAN",
    "OPTIMAL",
    "WEAK",
]
