import time

from absynth import load_fixture
from absynth.verify import (
    DomainBounds, StateUniverse, classify_all, check_restrictions,
    check_alt_enabling, check_single_enabling, check_invariant, check_exclusive,
    forget_project, exists_atoms, template_formulas, random_formula,
    mentioned_fluents, VerifyError,
)
from absynth.parser import parse_formula, signature_of
from absynth.syntax import Act, Var, Not, Top
from absynth.semantics import AbstractState

proj = load_fixture("blocks_world")
low, m = proj.low, proj.mapping
insts = proj.instances
sig = signature_of(low)


def f(text, scope=()):
    return parse_formula(text, sig, scope=scope)


# --- 1. classification table, seeds totals 3..6 (criterion-2 path) ---------
t0 = time.time()
bounds = DomainBounds(3, 6, policy="seeds",
                      seeds=(insts["tower3"], insts["tower4"],
                             insts["tower5"], insts["tower6"]))
table = classify_all(low, m, bounds)
dt = time.time() - t0
for k in sorted(table):
    e = table[k]
    print(f"  {k}: {e.label}  [{e.provenance}]")
want = {
    ("Putdown", "Holding"): "Disabling",
    ("Putdown", "Num"): "FnInvariant",
    ("PickAboveC", "Holding"): "Enabling",
    ("PickAboveC", "Num"): "Decremental",
}
got = {k: e.label for k, e in table.items()}
assert got == want, (got, want)
print(f"classification table OK in {dt:.2f}s")

# --- 2. guarded-property suite ---------------------------------------------
t0 = time.time()
b25 = DomainBounds(2, 5)
uni = StateUniverse(low, b25)
x, y = Var("x"), Var("y")

c = check_alt_enabling(low, Act("putdown", (x,)), f("!holding(x)", ("x",)),
                       universe=uni)
print("putdown alt-enables !holding(x):", c.verdict)
assert c.verdict == "pass"

c = check_single_enabling(low, Act("unstack", (x, y)), f("on+(x, C)", ("x",)),
                          f("on+(x, C)", ("x",)), universe=uni)
print("unstack singly enables on+(x,C) [literal]:", c.verdict,
      "-", c.counterexample.describe() if c.counterexample else "")
assert c.verdict == "fail"

c = check_single_enabling(low, Act("unstack", (x, y)), Not(f("on+(x, C)", ("x",))),
                          f("on+(x, C)", ("x",)), universe=uni)
print("unstack singly enables !on+(x,C):", c.verdict)
assert c.verdict == "pass"

c = check_invariant(low, Act("putdown", (x,)), f("on+(y, C)", ("y",)),
                    universe=uni)
print("putdown leaves on+(y,C) invariant:", c.verdict)
assert c.verdict == "pass"

c = check_exclusive(low, f("holding(x)", ("x",)), universe=uni)
print("holding exclusive:", c.verdict)
assert c.verdict == "pass"

# refuted mutants
c = check_alt_enabling(low, Act("stack", (x, y)), f("holding(x)", ("x",)),
                       universe=uni)
print("stack alt-enables holding(x):", c.verdict,
      "-", c.counterexample.describe() if c.counterexample else "")
assert c.verdict == "fail"

c = check_single_enabling(low, Act("unstack", (x, y)), Not(f("on+(x, C)", ("x",))),
                          universe=uni)  # guard dropped
print("unguarded unstack singly enables !on+(x,C):", c.verdict)
assert c.verdict == "fail"

c = check_exclusive(low, f("on+(x, C)", ("x",)), universe=uni)
print("on+(x,C) exclusive:", c.verdict,
      "-", c.counterexample.describe() if c.counterexample else "")
assert c.verdict == "fail"
print(f"guarded-property suite OK in {time.time()-t0:.2f}s")

# --- 3. forget_project spot values ------------------------------------------
t0 = time.time()
top = Top()
con = f("true")
phi = f("!(exists x. holding(x)) && (exists x. on+(x, C))")
from absynth.syntax import conj
constraint = conj(list(low.constraints))
r3 = forget_project(low, m, Top(), phi, 3)
print("project(phi, n=3, unconstrained):",
      sorted((a.truth("Holding"), a.value("Num")) for a in r3))
assert sorted((a.truth("Holding"), a.value("Num")) for a in r3) == [(False, 1), (False, 2)]
r1 = forget_project(low, m, Top(), top, 1)
print("project(T, n=1, unconstrained):",
      sorted((a.truth("Holding"), a.value("Num")) for a in r1))
rt3 = forget_project(low, m, Top(), top, 3)
print("project(T, n=3, unconstrained):",
      sorted((a.truth("Holding"), a.value("Num")) for a in rt3))
assert sorted((a.truth("Holding"), a.value("Num")) for a in rt3) == [
    (False, 0), (False, 1), (False, 2), (True, 0), (True, 1), (True, 2)]
print(f"forget_project OK in {time.time()-t0:.2f}s")

# --- 4. template family ------------------------------------------------------
atoms = exists_atoms(m)
print("atoms:", len(atoms))
t1 = template_formulas(atoms, 1)
t2 = template_formulas(atoms, 2)
print("templates depth1:", len(t1), "depth2:", len(t2))
import random as _random
rng = _random.Random(7)
samples = [random_formula(atoms, 4, rng) for _ in range(5)]
print("random sample depths OK")

# --- 5. full restriction report ---------------------------------------------
t0 = time.time()
res = check_restrictions(low, m, DomainBounds(2, 5))
dt = time.time() - t0
print(res.report.text())
print(f"check_restrictions in {dt:.2f}s; overall={res.verdict}")
assert res.verdict == "pass", res.report.text()

print("ALL OK")
