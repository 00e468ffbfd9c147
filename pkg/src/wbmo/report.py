"""Verification records shared by every check and by the command line."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

# Stable anchor keys attached to report rows; each maps to a short description
# of the statement being checked.
ANCHORS = {
    "sec:weights": "Muckenhoupt characteristics",
    "prop:winva1char": "operator norm of M on weighted L-infinity equals the A1 characteristic",
    "prop:wainfsparse": "Carleson packing of sparse families by the A-infinity constant",
    "sec:wBMO": "weighted BMO norms and their inclusions",
    "eq:bmoinclusiona1": "BMO-infinity bounded by A1 times BMO-1",
    "eq:bmoinclusiona12": "weak BMO-infinity bounded by A1 times weak BMO-1",
    "prop:msharpbmow": "BMO-infinity norm equals the weighted sup of the sharp maximal function",
    "prop:bmoconst": "mean-centred and optimally centred oscillations within factor two",
    "eq:jsequivalence": "sharp maximal function versus maximal median oscillation",
    "sec:wBMO:weak-strong": "strong and weak BMO-infinity are equivalent when the inverse weight is A1",
    "thm:fefsteinbfs": "Fefferman-Stein inequality on a function space",
    "lem:rdf": "Rubio de Francia majorant",
    "thm:sharpbmoextrap": "extrapolation from weighted BMO bounds",
    "rem:sharpextrap": "weighted Lebesgue instance of the extrapolation",
    "section:czo": "sparse counterexample families",
    "eq:wbmosparse1": "sparse operator into BMO-1",
    "eq:wbmosparse2": "sparse operator into BMO-infinity",
    "eq:wbmosparse3": "sparse operator into weak BMO-1",
    "eq:wbmosparse4": "sparse operator into weak BMO-infinity",
    "lerners_formula": "pointwise sparse domination by median oscillations",
    "czo:osc_estimate": "median oscillation of Tf by dilated averages",
    "czo:pointwise_TF": "pointwise sparse bound for Tf",
    "czo:embedding": "A_p weights satisfy the B(Omega) condition",
    "czo:ap": "shell decomposition of the B(Omega) integral",
    "czo:1": "Calderon-Zygmund operator into BMO-1",
    "czo:2": "Calderon-Zygmund operator into BMO-infinity",
    "artifact": "consistency check of the implementation itself",
}

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    if rhs == 0:
        return math.inf
    return lhs / rhs


@dataclass
class VerificationReport:
    check_id: str
    paper_anchor: str
    lhs: float
    rhs: float
    ratio: float
    tolerance: float
    status: str
    notes: str = ""
    kind: str = "inequality"

    def __post_init__(self):
        if self.paper_anchor not in ANCHORS:
            raise KeyError(f"unknown anchor {self.paper_anchor!r}")

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    @classmethod
    def inequality(cls, check_id, anchor, lhs, rhs, tolerance=1e-12, notes=""):
        """Pass iff ``lhs <= rhs (1 + tolerance)``; NaN on either side fails."""
        lhs, rhs = float(lhs), float(rhs)
        if math.isnan(lhs) or math.isnan(rhs):
            ok = False
        elif lhs <= 0.0:
            ok = True
        else:
            ok = lhs <= rhs * (1.0 + tolerance) if rhs >= 0 else False
        return cls(check_id, anchor, lhs, rhs, _ratio(lhs, rhs), tolerance, PASS if ok else FAIL, notes)

    @classmethod
    def identity(cls, check_id, anchor, lhs, rhs, tolerance=1e-12, notes=""):
        lhs, rhs = float(lhs), float(rhs)
        ok = abs(lhs - rhs) <= tolerance * max(1.0, abs(rhs))
        return cls(
            check_id, anchor, lhs, rhs, _ratio(lhs, rhs), tolerance, PASS if ok else FAIL, notes, "identity"
        )

    @classmethod
    def skipped(cls, check_id, anchor, lhs=math.nan, rhs=math.nan, notes=""):
        return cls(check_id, anchor, float(lhs), float(rhs), math.nan, 0.0, SKIPPED, notes)

    def to_dict(self) -> dict:
        return {k: _clean(v) for k, v in asdict(self).items()}


def summarize(reports: list[VerificationReport]) -> dict:
    counts = {PASS: 0, FAIL: 0, SKIPPED: 0}
    for r in reports:
        counts[r.status] += 1
    return counts
