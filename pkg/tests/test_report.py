"""Reports: verdict aggregation, rendering, and serialization."""

import json

import pytest

from absynth.report import FAIL, PASS, UNKNOWN, CertReport, Check, Counterexample


def test_verdict_strings():
    assert (PASS, FAIL, UNKNOWN) == ("pass", "fail", "unknown")


def test_fail_requires_evidence():
    with pytest.raises(ValueError):
        Check("thing", FAIL)
    Check("thing", FAIL, detail="broken")  # detail alone suffices
    Check("thing", FAIL, counterexample=Counterexample(2, note="state"))


def test_report_worst_verdict_wins():
    r = CertReport("t")
    r.add(Check("a", PASS, 3))
    assert r.verdict == PASS
    r.add(Check("b", UNKNOWN, 2))
    assert r.verdict == UNKNOWN
    r.add(Check("c", FAIL, 2, detail="x"))
    assert r.verdict == FAIL
    assert [c.name for c in r.failures()] == ["c"]
    assert [c.name for c in r.unknowns()] == ["b"]


def test_empty_report_passes_vacuously():
    assert CertReport("t").verdict == PASS


def test_text_rendering_layout():
    r = CertReport("demo report")
    r.add(Check("first-check", PASS, 4))
    r.add(Check("second", FAIL, 2, counterexample=Counterexample(
        2, state="<state s>", action="go", note="went wrong")))
    out = r.text()
    assert out.splitlines()[0] == "demo report"
    assert "first-check" in out and "up to 4 objects" in out
    assert "went wrong" in out
    assert out.rstrip().endswith("overall: FAIL")


def test_syntactic_checks_render_without_bound():
    r = CertReport("t")
    r.add(Check("shape", PASS, 0))
    assert "syntactic" in r.text()


def test_json_round_trips_and_is_sorted():
    r = CertReport("t")
    r.add(Check("a", PASS, 2, detail="fine"))
    blob = r.json()
    data = json.loads(blob)
    assert data["title"] == "t"
    assert data["overall"] == PASS
    assert data["checks"][0]["name"] == "a"
    assert blob == r.json()  # deterministic


def test_counterexample_describe():
    c = Counterexample(3, state="<state on(B1, C)>", action="stack", args=("B1", "C"))
    text = c.describe()
    assert "stack" in text and "B1" in text and "3" in text
