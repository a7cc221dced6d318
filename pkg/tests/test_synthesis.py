"""Synthesis: classification tables to successor-state axioms, witnesses to
initial theory and preconditions, full assembly with provenance."""

import dataclasses

import pytest

from absynth.parser import parse_formula
from absynth.printer import render_high, unparse
from absynth.report import FAIL, PASS, CertReport, Check
from absynth.synthesis import (
    SynthesisError,
    SynthesisInput,
    simplify_lia,
    synth_init,
    synth_precond,
    synth_ssa,
    synthesize,
)
from absynth.syntax import Bot, Top, normalize
from absynth.theory import EffectClause, FnSSA, PredSSA, SetClause
from absynth.verify import ClassEntry


def entry(action, fluent, label):
    return ClassEntry(action, fluent, label, "verified-up-to-bound:4")


FIXTURE_TABLE = {
    ("PickAboveC", "Holding"): entry("PickAboveC", "Holding", "Enabling"),
    ("PickAboveC", "Num"): entry("PickAboveC", "Num", "Decremental"),
    ("Putdown", "Holding"): entry("Putdown", "Holding", "Disabling"),
    ("Putdown", "Num"): entry("Putdown", "Num", "FnInvariant"),
}


# ---------------------------------------------------------------------------
# Pieces


def test_synth_ssa_golden():
    pred_ssas, fn_ssas = synth_ssa(FIXTURE_TABLE)
    assert pred_ssas["Holding"] == PredSSA(
        "Holding", (), (EffectClause("add", "PickAboveC"), EffectClause("del", "Putdown"))
    )
    (clause,) = fn_ssas["Num"].clauses
    assert clause.action == "PickAboveC"
    assert unparse(clause.value) == "Num - 1"


def test_synth_ssa_order_independent():
    shuffled = dict(reversed(list(FIXTURE_TABLE.items())))
    assert synth_ssa(shuffled) == synth_ssa(FIXTURE_TABLE)


def test_synth_ssa_rejects_unknown():
    table = {**FIXTURE_TABLE, ("Putdown", "Num"): entry("Putdown", "Num", "Unknown")}
    with pytest.raises(SynthesisError, match="unclassified"):
        synth_ssa(table)


def test_synth_ssa_incremental_clause():
    table = {("Go", "Ct"): entry("Go", "Ct", "Incremental")}
    _, fn_ssas = synth_ssa(table)
    (clause,) = fn_ssas["Ct"].clauses
    assert unparse(clause.value) == "Ct + 1"


def test_simplify_lia_drops_subsumed_disjunction():
    f = parse_formula("Num >= 0 && Num > 0 && !Holding", None)
    g = simplify_lia(f)
    assert normalize(g) == normalize(parse_formula("Num > 0 && !Holding", None))
    # A lone disjunction is untouched.
    h = parse_formula("Num > 0 || Holding", None)
    assert simplify_lia(h) == normalize(h)


def test_synth_init_raw_vs_simplified(low, mapping):
    w = mapping.witnesses["init"]
    raw = synth_init(low, mapping, w, simplify=False)
    assert normalize(raw) == normalize(
        parse_formula("!Holding && Num > 0 && Num >= 0", None)
    )
    tidy = synth_init(low, mapping, w, simplify=True)
    assert normalize(tidy) == normalize(parse_formula("!Holding && Num > 0", None))


def test_synth_precond(low, mapping):
    f = synth_precond(low, mapping, "Putdown", mapping.witnesses["Putdown"])
    assert normalize(f) == normalize(parse_formula("Holding", None))


def test_synth_missing_witness(low, mapping):
    with pytest.raises(SynthesisError, match="witness"):
        synth_init(low, mapping, None)
    with pytest.raises(SynthesisError, match="witness"):
        synth_precond(low, mapping, "Putdown", None)


def test_synth_foreign_witness(low, mapping):
    from absynth.parser import signature_of

    stray = parse_formula("exists x. on(x, C)", signature_of(low))
    with pytest.raises(SynthesisError):
        synth_init(low, mapping, stray)


# ---------------------------------------------------------------------------
# Full assembly


def test_synthesize_reproduces_declared_high(low, mapping, high):
    inp = SynthesisInput(low, mapping, FIXTURE_TABLE)
    got, provenance = synthesize(inp)
    assert render_high(got) == render_high(high)
    assert got.validate() == []
    assert provenance["warnings"] == []
    assert provenance["restrictions"] == "assumed"
    assert provenance["source"] == "blocks"
    assert provenance["mapping"] == "counters"
    assert provenance["classifications"]["PickAboveC:Num"]["label"] == "Decremental"


def test_synthesize_deterministic(low, mapping):
    inp = SynthesisInput(low, mapping, FIXTURE_TABLE)
    a, _ = synthesize(inp)
    b, _ = synthesize(inp)
    assert render_high(a) == render_high(b)


def test_synthesize_keeps_frame_only_fluents(low, mapping):
    table = {
        **FIXTURE_TABLE,
        ("PickAboveC", "Holding"): entry("PickAboveC", "Holding", "Invariant"),
        ("Putdown", "Holding"): entry("Putdown", "Holding", "Invariant"),
    }
    got, _ = synthesize(SynthesisInput(low, mapping, table))
    assert got.pred_ssas["Holding"].clauses == ()
    assert got.validate() == []


def test_synthesize_warns_on_unsatisfiable_witness(low, mapping):
    m = dataclasses.replace(
        mapping, witnesses={**mapping.witnesses, "Putdown": Bot()}
    )
    got, provenance = synthesize(SynthesisInput(low, m, FIXTURE_TABLE))
    assert got.actions["Putdown"].precond == Bot()
    assert any("Putdown" in w for w in provenance["warnings"])


def test_synthesize_refuses_failed_report(low, mapping):
    bad = CertReport("restriction checks")
    bad.add(Check("simply-forgettable", FAIL, 3, detail="stray image"))
    inp = SynthesisInput(low, mapping, FIXTURE_TABLE, report=bad)
    with pytest.raises(SynthesisError, match="simply-forgettable"):
        synthesize(inp)


def test_synthesize_accepts_passing_report(low, mapping):
    ok = CertReport("restriction checks")
    ok.add(Check("flat", PASS, 0))
    got, provenance = synthesize(SynthesisInput(low, mapping, FIXTURE_TABLE, report=ok))
    assert provenance["restrictions"] == {"flat": {"verdict": "pass", "bound": 0}}
    assert got.validate() == []


def test_synthesize_end_to_end_from_verification(low, mapping, table_small):
    # The verified table (not the hand-written one) produces the same theory.
    got, provenance = synthesize(SynthesisInput(low, mapping, table_small))
    declared = render_high(got)
    ref, _ = synthesize(SynthesisInput(low, mapping, FIXTURE_TABLE))
    assert declared == render_high(ref)
    assert all(
        v["provenance"].startswith("verified-up-to-bound")
        for v in provenance["classifications"].values()
    )
