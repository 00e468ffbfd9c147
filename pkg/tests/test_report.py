import json
import math

import pytest

from wbmo.report import ANCHORS, VerificationReport, summarize


def test_inequality_semantics():
    assert VerificationReport.inequality("a", "artifact", 1.0, 1.0).status == "pass"
    assert VerificationReport.inequality("a", "artifact", 1.0 + 1e-13, 1.0, 1e-12).status == "pass"
    assert VerificationReport.inequality("a", "artifact", 1.1, 1.0).status == "fail"
    assert VerificationReport.inequality("a", "artifact", 0.0, 0.0).status == "pass"
    assert VerificationReport.inequality("a", "artifact", math.nan, 1.0).status == "fail"
    assert VerificationReport.inequality("a", "artifact", 1.0, math.inf).status == "pass"


def test_identity_semantics():
    assert VerificationReport.identity("a", "artifact", 2.0, 2.0 + 1e-13, 1e-12).status == "pass"
    assert VerificationReport.identity("a", "artifact", 2.0, 2.1, 1e-12).status == "fail"
    assert VerificationReport.identity("a", "artifact", 1e-14, 0.0, 1e-12).status == "pass"


def test_unknown_anchor_rejected():
    with pytest.raises(KeyError):
        VerificationReport.inequality("a", "nowhere", 1.0, 2.0)


def test_serialization_and_summary():
    rows = [
        VerificationReport.inequality("a", "artifact", 1.0, math.inf),
        VerificationReport.skipped("b", "czo:1"),
        VerificationReport.inequality("c", "czo:2", 3.0, 1.0),
    ]
    text = json.dumps([r.to_dict() for r in rows])
    assert "Infinity" not in text and "NaN" not in text
    assert summarize(rows) == {"pass": 1, "fail": 1, "skipped": 1}
    assert all(ANCHORS[r.paper_anchor] for r in rows)
