import sys

from absynth import load_fixture
from absynth.parser import parse_formula, parse_term, signature_of
from absynth.semantics import (
    AbstractState,
    BudgetError,
    FiniteDomain,
    FiniteState,
    abstract_state,
    do_program,
    domain_for,
    enumerate_states,
    eval_formula,
    eval_term,
    ground_actions,
    instance_state,
    poss,
    reachable,
    successor,
)
from absynth.syntax import conj

proj = load_fixture()
low = proj.low
sig = signature_of(low, extra_objects=("B1", "B2"))

fails = []


def check(label, got, want):
    ok = got == want
    print(("PASS" if ok else "FAIL"), label, "->", got, "want", want)
    if not ok:
        fails.append(label)


# --- domain / state basics -------------------------------------------------
dom2 = domain_for(low, ("B1",))
s_tower2 = FiniteState(dom2, {"holding": set(), "on": {("B1", "C")}})

check("tc strict B1->C", eval_formula(s_tower2, {}, parse_formula("on+(B1, C)", sig)), True)
check("tc reflexive C,C", eval_formula(s_tower2, {}, parse_formula("on*(C, C)", sig)), True)
check("tc strict C,C", eval_formula(s_tower2, {}, parse_formula("on+(C, C)", sig)), False)
check("tc explicit form", eval_formula(s_tower2, {}, parse_formula("tc[u, v: on(u, v)](B1, C)", sig)), True)

dom3 = domain_for(low, ("B1", "B2"))
s_tower3 = FiniteState(dom3, {"holding": set(), "on": {("B2", "B1"), ("B1", "C")}})
check("count above C tower3", eval_term(s_tower3, {}, parse_term("count x. on+(x, C)", sig)), 2)
check("count above C tower2", eval_term(s_tower2, {}, parse_term("count x. on+(x, C)", sig)), 1)
check("arith 3-5", eval_term(s_tower2, {}, parse_term("3 - 5", sig)), -2)

# --- poss ------------------------------------------------------------------
s_table = FiniteState(dom2, {"holding": set(), "on": set()})
check("poss pickup table block", poss(low, s_table, "pickup", ("B1",)), True)
check("poss pickup tower top", poss(low, s_tower3, "pickup", ("B2",)), False)
check("poss pickup under block", poss(low, s_tower3, "pickup", ("B1",)), False)
s_holding_other = FiniteState(dom3, {"holding": {("B2",)}, "on": set()})
check("poss pickup gripper full", poss(low, s_holding_other, "pickup", ("B1",)), False)
check("poss putdown empty hand", poss(low, s_tower3, "putdown", ("B1",)), False)
s_hold = FiniteState(dom2, {"holding": {("B1",)}, "on": set()})
check("poss putdown holding", poss(low, s_hold, "putdown", ("B1",)), True)
check("poss unstack top", poss(low, s_tower3, "unstack", ("B2", "B1")), True)
check("poss unstack mid", poss(low, s_tower3, "unstack", ("B1", "C")), False)
check("poss stack holding", poss(low, s_hold, "stack", ("B1", "C")), True)

# --- successor ---------------------------------------------------------------
s_after = successor(low, s_hold, "stack", ("B1", "C"))
check("stack adds on", s_after.atom("on", ("B1", "C")), True)
check("stack drops holding", s_after.atom("holding", ("B1",)), False)
check("stack result equals tower2", s_after, s_tower2)
s_back = successor(low, s_tower2, "unstack", ("B1", "C"))
check("unstack picks up", s_back, s_hold)

# --- programs ----------------------------------------------------------------
m = proj.mapping
res = do_program(low, s_tower2, m.actions["PickAboveC"])
check("do PickAboveC tower2", res, {s_hold})
res2 = do_program(low, s_tower2, m.actions["Putdown"])
check("do Putdown empty hand", res2, set())
res3 = do_program(low, s_hold, m.actions["Putdown"])
s_put = FiniteState(dom2, {"holding": set(), "on": set()})
check("do Putdown holding", res3, {s_put})

# tower3: PickAboveC can take either of the two tower blocks? unstack needs clear top
res4 = do_program(low, s_tower3, m.actions["PickAboveC"])
print("  PickAboveC tower3 ->", sorted(res4))
check("PickAboveC tower3 single option", len(res4), 1)

# --- abstraction ---------------------------------------------------------------
a3 = abstract_state(m, s_tower3)
check("abstract tower3", a3, AbstractState.make({"Holding": False}, {"Num": 2}))
check("abstract after pick", abstract_state(m, s_hold), AbstractState.make({"Holding": True}, {"Num": 0}))

# --- high-level ops ---------------------------------------------------------
high = proj.high
h0 = AbstractState.make({"Holding": False}, {"Num": 2})
check("high poss pick", poss(high, h0, "PickAboveC"), True)
check("high poss putdown", poss(high, h0, "Putdown"), False)
h1 = successor(high, h0, "PickAboveC")
check("high pick succ", h1, AbstractState.make({"Holding": True}, {"Num": 1}))
h2 = successor(high, h1, "Putdown")
check("high putdown succ", h2, AbstractState.make({"Holding": False}, {"Num": 1}))

# --- instances, reachability --------------------------------------------------
di, si = instance_state(low, proj.instances["tower3"])
check("instance tower3 state", si, FiniteState(di, {"holding": set(), "on": {("B1", "B2"), ("B2", "C")}}))
check("ground actions count tower2", len(list(ground_actions(low, dom2))), 2 + 2 + 4 + 4)

reach = reachable(low, di, si, step="poss-only")
print("  reachable poss-only from tower3 instance:", len(reach))
constraints = conj(low.constraints)
viol = [s for s in reach if not eval_formula(s, {}, constraints)]
check("constraints preserved on reachable", viol, [])

reach_prog = reachable(low, di, si, step=m.actions["PickAboveC"])
print("  reachable via PickAboveC:", len(reach_prog))

# --- enumeration ----------------------------------------------------------------
target = conj([low.init, *low.constraints])
states2 = enumerate_states(low, dom2, target)
print("  admissible init states (C,B1):", len(states2), sorted(states2))
check("enumeration small domain", states2, [s_tower2])

dom_c = FiniteDomain(("C",))
states1 = enumerate_states(low, dom_c, target)
check("enumeration objects={C}", states1, [])

states3 = enumerate_states(low, dom3, target)
print("  admissible init states (C,B1,B2):", len(states3))
for s in states3:
    print("   ", s)
# towers over {B1,B2} with base C and every block placed or... init only requires
# no holding and someone above C; blocks may also be on the table.
viol3 = [s for s in states3 if not eval_formula(s, {}, target)]
check("enumerated states satisfy target", viol3, [])

try:
    enumerate_states(low, dom3, target, budget=10)
    check("budget error raised", "no error", "BudgetError")
except BudgetError as e:
    check("budget error raised", "BudgetError", "BudgetError")

print()
print("FAILURES:", fails if fails else "none")
sys.exit(1 if fails else 0)
