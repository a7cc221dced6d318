import dataclasses
import time

from absynth import load_fixture
from absynth.bisim import (
    BisimError, build_high_ts, build_low_ts, certify, check_bisim,
    edge_law_violations,
)
from absynth.semantics import AbstractState, abstract_state, instance_state
from absynth.synthesis import SynthesisInput, synthesize
from absynth.syntax import And, FluentFn, IntConst, Not, PredFluent, Sub
from absynth.theory import ActionDecl, FnSSA, SetClause
from absynth.verify import DomainBounds, classify_all

proj = load_fixture("blocks_world")
low, m = proj.low, proj.mapping
high = proj.high

# --- high TS from (F,3): ledgered 7 states --------------------------------
a0 = AbstractState.make({"Holding": False}, {"Num": 3})
ts = build_high_ts(high, a0, {"Num": 5})
print("high TS states:", len(ts.states))
for i, s in enumerate(ts.states):
    print("  ", i, s)
assert len(ts.states) == 7

# (F,0): single state
ts0 = build_high_ts(high, AbstractState.make({"Holding": False}, {"Num": 0}), {"Num": 2})
assert len(ts0.states) == 1 and not ts0.edges

# --- low TS from tower4 (3 blocks on C) ------------------------------------
dom, s0 = instance_state(low, proj.instances["tower4"])
tsl = build_low_ts(low, m, dom, s0)
print("low TS states from tower4:", len(tsl.states), "edges:", len(tsl.edges))

v = check_bisim(tsl, build_high_ts(high, abstract_state(m, s0), {"Num": 4}), m)
print("bisimilar:", v.bisimilar, "relation size:", len(v.relation))
assert v.bisimilar

# rejected initial: holding violates init
from absynth.semantics import FiniteState
bad = FiniteState(dom, {"holding": frozenset({("B1",)}), "on": frozenset()})
try:
    build_low_ts(low, m, dom, bad)
    raise AssertionError("expected BisimError")
except BisimError as e:
    print("rejected initial OK:", e)

# --- mutated high: Putdown precond flipped → back clause at initial --------
flipped = dataclasses.replace(
    high,
    actions={**high.actions,
             "Putdown": ActionDecl("Putdown", (), Not(PredFluent("Holding")))},
)
v = check_bisim(tsl, build_high_ts(flipped, abstract_state(m, s0), {"Num": 4}), m)
print("flipped verdict:", v.bisimilar, "-", v.counterexample.describe())
assert not v.bisimilar and v.counterexample.clause == "back"
assert v.counterexample.action == "Putdown"

# --- mutated high: off-by-one Num SSA → forth/atom counterexample ----------
off1 = dataclasses.replace(
    high,
    fn_ssas={**high.fn_ssas,
             "Num": FnSSA("Num", (SetClause(
                 "PickAboveC", Sub(FluentFn("Num"), IntConst(2))),))},
)
v = check_bisim(tsl, build_high_ts(off1, abstract_state(m, s0), {"Num": 4}), m)
print("off-by-one verdict:", v.bisimilar, "-", v.counterexample.describe())
assert not v.bisimilar

# --- divergence guard -------------------------------------------------------
import absynth.syntax as sx
diverging = dataclasses.replace(
    high,
    fn_ssas={**high.fn_ssas,
             "Num": FnSSA("Num", (SetClause(
                 "PickAboveC", sx.Add(FluentFn("Num"), IntConst(1))),))},
    actions={**high.actions,
             "PickAboveC": ActionDecl("PickAboveC", (), sx.Top())},
)
try:
    build_high_ts(diverging, a0, {"Num": 6})
    raise AssertionError("expected BisimError")
except BisimError as e:
    print("divergence OK:", e)

# --- identity bisim ---------------------------------------------------------
tsh = build_high_ts(high, a0, {"Num": 5})
# identical systems: low side replaced by high? check_bisim expects low states;
# skip — covered by real tests differently.

# --- edge laws ---------------------------------------------------------------
table = classify_all(low, m, DomainBounds(2, 4))
viol = edge_law_violations(tsh, table)
print("edge-law violations on fixture TS:", viol)
assert viol == []
viol = edge_law_violations(build_high_ts(off1, abstract_state(m, s0), {"Num": 4}), table)
print("edge-law violations on off-by-one TS:", len(viol), viol[:2])
assert viol

# --- full certification, sizes 3..5 (criterion-6 scale) ---------------------
t0 = time.time()
rep = certify(low, m, high, DomainBounds(3, 5), classifications=table)
dt = time.time() - t0
print(rep.text())
print(f"certify(3..5) in {dt:.1f}s")
assert rep.verdict == "pass", rep.text()

# determinism under jobs
rep4 = certify(low, m, high, DomainBounds(3, 5), classifications=table, jobs=4)
assert rep4.text() == rep.text()
print("jobs determinism OK")

# vacuous size: bounds 1..1 → no admissible initial state at size 1 (no blocks)
repv = certify(low, m, high, DomainBounds(1, 1))
print(repv.text())
assert repv.verdict == "unknown"
print("ALL OK")
