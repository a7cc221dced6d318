import time

from absynth import load_fixture
from absynth.printer import render_high, unparse
from absynth.synthesis import SynthesisInput, synth_init, synth_precond, synthesize
from absynth.syntax import alpha_equal, normalize
from absynth.verify import DomainBounds, classify_all

proj = load_fixture("blocks_world")
low, m, high_declared = proj.low, proj.mapping, proj.high

t0 = time.time()
table = classify_all(low, m, DomainBounds(2, 5))
inp = SynthesisInput(low, m, table)
high, prov = synthesize(inp, simplify=True)
dt = time.time() - t0

print(render_high(high))
print("--- declared ---")
print(render_high(high_declared))

# golden forms
print("init:", unparse(high.init))
print("Poss(Putdown):", unparse(high.precondition("Putdown")))
print("Poss(PickAboveC):", unparse(high.precondition("PickAboveC")))

assert alpha_equal(normalize(high.init), normalize(high_declared.init))
for a in ("Putdown", "PickAboveC"):
    assert alpha_equal(
        normalize(high.precondition(a)), normalize(high_declared.precondition(a))
    ), a
assert high.pred_ssas["Holding"] == high_declared.pred_ssas["Holding"], (
    high.pred_ssas["Holding"], high_declared.pred_ssas["Holding"])
assert high.fn_ssas["Num"] == high_declared.fn_ssas["Num"], (
    high.fn_ssas["Num"], high_declared.fn_ssas["Num"])

# unsimplified forms keep the bound conjunct
raw = synth_init(low, m, m.witnesses["init"], simplify=False)
print("raw init:", unparse(raw))
assert not alpha_equal(raw, normalize(high.init))

# determinism
high2, prov2 = synthesize(inp, simplify=True)
assert render_high(high2) == render_high(high)
assert prov2 == prov
print(f"synthesis golden OK in {dt:.2f}s")
import json
print(json.dumps(prov, indent=1, sort_keys=True)[:600])
