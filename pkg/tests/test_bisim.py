"""Bisimulation checking and instance certification.

The greatest-bisimulation verdicts are cross-checked against a brute-force
oracle that enumerates every subset of the atom-compatible pair set and
tests the definition directly.
"""

import dataclasses
from itertools import combinations

import pytest

from absynth.bisim import (
    BisimError,
    TransitionSystem,
    build_high_ts,
    build_low_ts,
    certify,
    check_bisim,
    edge_law_violations,
    parallel_map,
)
from absynth.parser import parse_formula
from absynth.report import FAIL, PASS, UNKNOWN
from absynth.semantics import (
    AbstractState,
    abstract_state,
    do_program,
    instance_state,
    successor,
)
from absynth.theory import FnSSA, SetClause
from absynth.syntax import Add, FluentFn, IntConst, Not, PredFluent, Sub, Top
from absynth.verify import DomainBounds


def A(h, v):
    return AbstractState.make({"Holding": h}, {"Num": v})


@pytest.fixture(scope="module")
def tower3_ts(low, mapping, instances):
    dom, s0 = instance_state(low, instances["tower3"])
    return build_low_ts(low, mapping, dom, s0)


@pytest.fixture(scope="module")
def high3_ts(high):
    return build_high_ts(high, A(False, 2), fn_bounds={"Num": 3})


# ---------------------------------------------------------------------------
# Transition system construction


def test_low_ts_tower3_shape(tower3_ts):
    # Hand enumeration: the only run is pick/put/pick/put down the tower.
    assert len(tower3_ts.states) == 5
    assert tower3_ts.initial == 0
    labels = [l for (_, l, _) in tower3_ts.edges]
    assert sorted(labels) == ["PickAboveC", "PickAboveC", "Putdown", "Putdown"]
    assert len(tower3_ts.edges) == 4


def test_low_ts_rejects_inadmissible_initial(low, mapping, instances):
    dom, s0 = instance_state(low, instances["tower3"])
    held = successor(low, s0, "unstack", ("B1", "B2"))
    with pytest.raises(BisimError, match="initial"):
        build_low_ts(low, mapping, dom, held)


def test_high_ts_shape(high3_ts):
    # (F,2) -Pick-> (T,1) -Put-> (F,1) -Pick-> (T,0) -Put-> (F,0)
    assert len(high3_ts.states) == 5
    assert set(high3_ts.states) == {
        A(False, 2), A(True, 1), A(False, 1), A(True, 0), A(False, 0)
    }
    assert len(high3_ts.edges) == 4


def test_high_ts_does_not_require_init(high):
    # The initial theory demands Num > 0; closure from (F, 0) still works,
    # the state is simply terminal.
    ts = build_high_ts(high, A(False, 0), fn_bounds={"Num": 3})
    assert ts.states == (A(False, 0),)
    assert ts.edges == ()


def test_high_ts_seven_states_from_three(high):
    ts = build_high_ts(high, A(False, 3), fn_bounds={"Num": 3})
    assert len(ts.states) == 7


def test_high_ts_divergence_guard(high):
    runaway = dataclasses.replace(
        high,
        actions={
            **high.actions,
            "PickAboveC": dataclasses.replace(high.actions["PickAboveC"], precond=Top()),
        },
        fn_ssas={
            "Num": FnSSA("Num", (SetClause("PickAboveC", Add(FluentFn("Num"), IntConst(1))),))
        },
    )
    with pytest.raises(BisimError, match="Num.*unbounded|unbounded.*Num"):
        build_high_ts(runaway, A(False, 1), fn_bounds={"Num": 3})


def test_dump_format(high3_ts):
    text = high3_ts.dump()
    lines = text.splitlines()
    assert lines[0].startswith("# state 0:")
    assert any(line == "# initial 0" for line in lines)
    assert any("\tPickAboveC\t" in line for line in lines)


# ---------------------------------------------------------------------------
# Brute-force oracle


def brute_force_bisimilar(ts_low, ts_high, m):
    """Independent oracle: search every subset of the atom-compatible pairs
    for a relation satisfying the bisimulation definition verbatim."""
    images = [abstract_state(m, s) for s in ts_low.states]
    r0 = [
        (i, j)
        for i in range(len(ts_low.states))
        for j in range(len(ts_high.states))
        if images[i] == ts_high.states[j]
    ]
    low_out = {}
    for (i, lab, k) in ts_low.edges:
        low_out.setdefault(i, []).append((lab, k))
    high_out = {}
    for (j, lab, k) in ts_high.edges:
        high_out.setdefault(j, []).append((lab, k))

    def is_bisim(rel):
        for (i, j) in rel:
            for lab, k in low_out.get(i, []):
                if not any((k, k2) in rel for lab2, k2 in high_out.get(j, []) if lab2 == lab):
                    return False
            for lab, k2 in high_out.get(j, []):
                if not any((k, k2) in rel for lab2, k in low_out.get(i, []) if lab2 == lab):
                    return False
        return True

    init_pair = (ts_low.initial, ts_high.initial)
    if init_pair not in r0:
        return False
    rest = [p for p in r0 if p != init_pair]
    for size in range(len(rest) + 1):
        for extra in combinations(rest, size):
            rel = set(extra) | {init_pair}
            if is_bisim(rel):
                return True
    return False


def test_bisim_tower3_matches_oracle(tower3_ts, high3_ts, mapping):
    verdict = check_bisim(tower3_ts, high3_ts, mapping)
    assert verdict.bisimilar
    assert brute_force_bisimilar(tower3_ts, high3_ts, mapping)
    # The relation is sound: every related pair agrees on the abstraction.
    for (i, j) in verdict.relation:
        assert abstract_state(mapping, tower3_ts.states[i]) == high3_ts.states[j]
    # And total here: every reachable low state has a partner.
    assert {i for (i, _) in verdict.relation} == set(range(5))


def test_bisim_tower4_matches_oracle(low, mapping, high, instances):
    dom, s0 = instance_state(low, instances["tower4"])
    ts_low = build_low_ts(low, mapping, dom, s0)
    ts_high = build_high_ts(high, A(False, 3), fn_bounds={"Num": 4})
    assert len(ts_low.states) == 7
    verdict = check_bisim(ts_low, ts_high, mapping)
    assert verdict.bisimilar
    assert brute_force_bisimilar(ts_low, ts_high, mapping)


# ---------------------------------------------------------------------------
# Mutations refuted with replayable counterexamples


def flipped_putdown(high):
    return dataclasses.replace(
        high,
        actions={
            **high.actions,
            "Putdown": dataclasses.replace(
                high.actions["Putdown"],
                precond=Not(PredFluent("Holding")),
            ),
        },
    )


def off_by_one(high):
    return dataclasses.replace(
        high,
        fn_ssas={
            "Num": FnSSA("Num", (SetClause("PickAboveC", Sub(FluentFn("Num"), IntConst(2))),))
        },
    )


def replay(low, mapping, ts_low, cx):
    """Re-derive the counterexample's claim with the plain semantics: the
    reported low state must be reachable by executing the refinement along
    the reported path, and the clause's claim must hold at the endpoint."""
    s = cx.low_state
    h = cx.high_state
    assert s in set(ts_low.states)
    frontier = {ts_low.states[ts_low.initial]}
    for label in cx.path:
        step = set()
        for st in frontier:
            step |= do_program(low, st, mapping.actions[label])
        frontier = step
    assert s in frontier
    if cx.clause == "atom":
        assert abstract_state(mapping, s) != h
    elif cx.clause == "back":
        assert len(do_program(low, s, mapping.actions[cx.action])) == 0
    elif cx.clause == "forth":
        assert len(do_program(low, s, mapping.actions[cx.action])) > 0
    else:
        raise AssertionError(f"unexpected clause {cx.clause}")


def test_flipped_precondition_refuted(low, mapping, high, instances):
    mutant = flipped_putdown(high)
    dom, s0 = instance_state(low, instances["tower3"])
    ts_low = build_low_ts(low, mapping, dom, s0)
    ts_high = build_high_ts(mutant, A(False, 2), fn_bounds={"Num": 3})
    verdict = check_bisim(ts_low, ts_high, mapping)
    assert not verdict.bisimilar
    assert not brute_force_bisimilar(ts_low, ts_high, mapping)
    cx = verdict.counterexample
    assert cx.clause == "back"
    assert cx.action == "Putdown"
    assert cx.path == ()  # refuted at the initial pair
    replay(low, mapping, ts_low, cx)


def test_off_by_one_refuted(low, mapping, high, instances):
    mutant = off_by_one(high)
    dom, s0 = instance_state(low, instances["tower3"])
    ts_low = build_low_ts(low, mapping, dom, s0)
    ts_high = build_high_ts(mutant, A(False, 2), fn_bounds={"Num": 3})
    verdict = check_bisim(ts_low, ts_high, mapping)
    assert not verdict.bisimilar
    assert not brute_force_bisimilar(ts_low, ts_high, mapping)
    cx = verdict.counterexample
    assert cx.clause == "atom"
    assert cx.path == ("PickAboveC",)
    replay(low, mapping, ts_low, cx)


def test_counterexample_describe_is_readable(low, mapping, high, instances):
    mutant = flipped_putdown(high)
    dom, s0 = instance_state(low, instances["tower3"])
    ts_low = build_low_ts(low, mapping, dom, s0)
    ts_high = build_high_ts(mutant, A(False, 2), fn_bounds={"Num": 3})
    text = check_bisim(ts_low, ts_high, mapping).counterexample.describe()
    assert "clause=back" in text
    assert "Putdown" in text


# ---------------------------------------------------------------------------
# Edge laws


def test_edge_laws_clean(high3_ts, table_small):
    assert edge_law_violations(high3_ts, table_small) == []


def test_edge_laws_catch_swapped_polarity(high, table_small):
    from absynth.theory import EffectClause, PredSSA

    swapped = dataclasses.replace(
        high,
        pred_ssas={
            "Holding": PredSSA(
                "Holding",
                (),
                (
                    EffectClause("del", "PickAboveC"),
                    EffectClause("add", "Putdown"),
                ),
            )
        },
    )
    ts = build_high_ts(swapped, A(False, 2), fn_bounds={"Num": 3})
    violations = edge_law_violations(ts, table_small)
    assert violations
    assert any("Holding" in v for v in violations)


def test_edge_laws_catch_off_by_one(high, table_small):
    ts = build_high_ts(off_by_one(high), A(False, 2), fn_bounds={"Num": 3})
    violations = edge_law_violations(ts, table_small)
    assert violations
    assert any("Num" in v for v in violations)


# ---------------------------------------------------------------------------
# Certification


def test_certify_fixture_small(low, mapping, high, table_small):
    report = certify(
        low, mapping, high,
        DomainBounds(min_objects=2, max_objects=4),
        classifications=table_small,
    )
    rows = {c.name: c for c in report.checks}
    assert list(rows) == [
        "bisimulation(size=2)", "bisimulation(size=3)", "bisimulation(size=4)"
    ]
    assert report.verdict == PASS
    assert "1 initial states" in rows["bisimulation(size=2)"].detail
    assert "6 initial states" in rows["bisimulation(size=3)"].detail
    assert "39 initial states" in rows["bisimulation(size=4)"].detail
    for c in rows.values():
        assert "edge laws hold" in c.detail
        assert "every reachable state related" in c.detail


def test_certify_vacuous_size_is_unknown(low, mapping, high):
    report = certify(low, mapping, high, DomainBounds(min_objects=1, max_objects=1))
    (row,) = report.checks
    assert row.verdict == UNKNOWN
    assert "vacuous" in row.detail


def test_certify_flipped_precondition_fails(low, mapping, high):
    report = certify(
        low, mapping, flipped_putdown(high),
        DomainBounds(min_objects=2, max_objects=3),
    )
    assert report.verdict == FAIL
    first_fail = report.failures()[0]
    assert first_fail.counterexample is not None
    assert "clause=back" in first_fail.counterexample.note


def test_certify_weakened_init_fails(low, mapping, high):
    # A high initial theory that admits Num = 0 contradicts the abstraction
    # of every admissible low initial state only if some low initial maps
    # there; weakening the LOW init instead lets in states whose abstraction
    # violates the high init.
    weakened = dataclasses.replace(
        low, init=parse_formula("true", None)
    )
    report = certify(
        weakened, mapping, high, DomainBounds(min_objects=2, max_objects=2)
    )
    assert report.verdict == FAIL
    note = report.failures()[0].counterexample.note
    assert "initial" in note


def test_certify_deterministic_across_jobs(low, mapping, high, table_small):
    b = DomainBounds(min_objects=2, max_objects=3)
    r1 = certify(low, mapping, high, b, classifications=table_small, jobs=1)
    r4 = certify(low, mapping, high, b, classifications=table_small, jobs=4)
    assert r1.json() == r4.json()
    assert r1.text() == r4.text()


def test_parallel_map_preserves_order():
    items = list(range(20))
    assert parallel_map(lambda v: v * v, items, jobs=4) == [v * v for v in items]
    assert parallel_map(lambda v: v + 1, items, jobs=1) == [v + 1 for v in items]
