"""Finite-state evaluation, progression, and bounded enumeration.

Expected values here are derived by hand or by an independent brute-force
path (full truth-table enumeration, closed-form combinatorics), never read
back from the functions under test.
"""

import math
from itertools import product

import pytest

from absynth.parser import parse_formula, parse_program, parse_term, signature_of
from absynth.semantics import (
    AbstractState,
    BudgetError,
    FiniteState,
    SemanticsError,
    abstract_state,
    do_program,
    domain_for,
    empty_state,
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
from absynth.theory import ActionDecl, FnSSA, HighLIBAT, SetClause


def tower_state(low, blocks):
    """A single tower: blocks[0] on blocks[1] on ... on C, nothing held."""
    dom = domain_for(low, blocks)
    chain = list(blocks) + ["C"]
    on = frozenset((chain[i], chain[i + 1]) for i in range(len(chain) - 1))
    return dom, FiniteState(dom, {"holding": frozenset(), "on": on})


# ---------------------------------------------------------------------------
# Term and formula evaluation


def test_count_term(low):
    dom, s = tower_state(low, ["B1", "B2"])
    sig = signature_of(low, dom.objects)
    num = eval_term(s, {}, parse_term("count x. on+(x, C)", sig))
    assert num == 2


def test_tc_reflexive_vs_strict(low):
    dom, s = tower_state(low, ["B1", "B2"])
    sig = signature_of(low, dom.objects)

    def holds(text):
        return eval_formula(s, {}, parse_formula(text, sig))

    assert holds("on*(C, C)")
    assert not holds("on+(C, C)")
    assert holds("on+(B1, C)")
    assert holds("on*(B1, C)")
    assert not holds("on+(C, B1)")


def test_eval_matches_truth_table(low):
    # Independent oracle: evaluate a quantified formula by explicit expansion.
    dom = domain_for(low, ["a", "b"])
    sig = signature_of(low, dom.objects)
    f = parse_formula("exists x. !holding(x) && !(exists z. on(z, x))", sig)
    objs = dom.objects
    pairs = [(o1, o2) for o1 in objs for o2 in objs]
    # All 2^3 x 2^9 states would be slow; sample the holding extension fully
    # and the on extension over single-atom states.
    for held in [frozenset(), frozenset({("a",)}), frozenset({("a",), ("b",)})]:
        for on_atom in [frozenset()] + [frozenset({p}) for p in pairs]:
            s = FiniteState(dom, {"holding": held, "on": on_atom})
            expected = any(
                (x,) not in held and all((z, x) not in on_atom for z in objs)
                for x in objs
            )
            assert eval_formula(s, {}, f) == expected


def test_eval_high_state():
    st = AbstractState.make({"Holding": False}, {"Num": 2})
    f = parse_formula("Num > 0 && !Holding", None)
    assert eval_formula(st, {}, f)
    assert st.truth("Holding") is False
    assert st.value("Num") == 2
    with pytest.raises(SemanticsError):
        st.value("Other")


def test_eval_congruence():
    st = AbstractState.make({}, {"Num": 5})
    assert eval_formula(st, {}, parse_formula("Num ~2~ 1", None))
    assert not eval_formula(st, {}, parse_formula("Num ~2~ 0", None))
    assert eval_formula(st, {}, parse_formula("Num ~3~ 2", None))


# ---------------------------------------------------------------------------
# Low-level progression


def test_poss_and_successor_unstack(low):
    dom, s = tower_state(low, ["B1", "B2"])
    assert poss(low, s, "unstack", ("B1", "B2"))
    assert not poss(low, s, "unstack", ("B2", "C"))  # B2 is covered by B1
    assert not poss(low, s, "pickup", ("B1",))  # B1 sits on B2
    s2 = successor(low, s, "unstack", ("B1", "B2"))
    assert s2.atom("holding", ("B1",))
    assert not s2.atom("on", ("B1", "B2"))
    assert s2.atom("on", ("B2", "C"))


def test_successor_is_pure(low):
    dom, s = tower_state(low, ["B1"])
    before = s.pred_ext
    successor(low, s, "unstack", ("B1", "C"))
    assert s.pred_ext == before


def test_ground_actions_deterministic(low):
    dom = domain_for(low, ["a"])
    acts = list(ground_actions(low, dom))
    assert acts == list(ground_actions(low, dom))
    assert ("pickup", ("C",)) in acts
    assert ("unstack", ("C", "a")) in acts


def test_do_program_guarded_refinement(low, mapping):
    # From a 2-tower only the clear top block is actually unstackable.
    dom, s = tower_state(low, ["B1", "B2"])
    prog = mapping.actions["PickAboveC"]
    out = do_program(low, s, prog)
    assert len(out) == 1
    (s2,) = out
    assert s2.atom("holding", ("B1",))


def test_do_program_star_and_choice(low):
    dom, s = tower_state(low, ["B1"])
    sig = signature_of(low, dom.objects)
    # Zero or more unstack/putdown rounds; all three phases are reachable.
    prog = parse_program("(unstack(B1, C); putdown(B1))*", sig)
    out = do_program(low, s, prog)
    assert len(out) == 2  # original tower, and the flattened table
    nil_out = do_program(low, s, parse_program("nil", sig))
    assert nil_out == {s}
    test_blocked = do_program(low, s, parse_program("holding(B1)?", sig))
    assert test_blocked == set()


def test_reachable_poss_only_tower2(low):
    # Hand enumeration: 5 states (tower, held block, all-down, held table
    # block C, and C restacked on B1).
    dom, s = tower_state(low, ["B1"])
    states = reachable(low, dom, s, step="poss-only")
    assert len(states) == 5
    c_on_b1 = FiniteState(dom, {"holding": frozenset(), "on": frozenset({("C", "B1")})})
    assert c_on_b1 in states


def test_reachable_all_ground_adds_garbage(low):
    # Applying stack(B1, C) axioms without its precondition forges a state
    # where B1 sits on two blocks at once; poss-only reachability never
    # produces it.
    dom, s = tower_state(low, ["B1", "B2"])
    every = reachable(low, dom, s, step="all-ground")
    legal = reachable(low, dom, s, step="poss-only")
    garbage = successor(low, s, "stack", ("B1", "C"))
    assert garbage.atom("on", ("B1", "B2")) and garbage.atom("on", ("B1", "C"))
    assert garbage in every
    assert garbage not in legal
    assert set(legal) <= set(every)


def test_reachable_program_step(low, mapping):
    dom, s = tower_state(low, ["B1", "B2"])
    states = reachable(low, dom, s, step=mapping.actions["Putdown"])
    assert states == [s]  # nothing is held, so Putdown is a dead end


def test_reachable_rejects_unknown_mode(low):
    dom, s = tower_state(low, ["B1"])
    with pytest.raises(SemanticsError, match="reachability mode"):
        reachable(low, dom, s, step="everything")


# ---------------------------------------------------------------------------
# High-level progression


def test_high_successor(high):
    s = AbstractState.make({"Holding": False}, {"Num": 2})
    s2 = successor(high, s, "PickAboveC")
    assert s2 == AbstractState.make({"Holding": True}, {"Num": 1})
    s3 = successor(high, s2, "Putdown")
    assert s3 == AbstractState.make({"Holding": False}, {"Num": 1})


def test_high_poss(high):
    s = AbstractState.make({"Holding": False}, {"Num": 0})
    assert not poss(high, s, "PickAboveC")
    assert poss(high, AbstractState.make({"Holding": False}, {"Num": 1}), "PickAboveC")


def test_high_conflicting_set_clauses_rejected():
    from absynth.syntax import FluentFn, IntConst, Top

    bat = HighLIBAT(
        name="toy",
        preds=(),
        fns=("Ct",),
        actions={"Go": ActionDecl("Go", (), Top())},
        pred_ssas={},
        fn_ssas={
            "Ct": FnSSA(
                "Ct",
                (
                    SetClause("Go", IntConst(1)),
                    SetClause("Go", IntConst(2)),
                ),
            )
        },
    )
    with pytest.raises(SemanticsError, match="2 values"):
        successor(bat, AbstractState.make({}, {"Ct": 0}), "Go")


# ---------------------------------------------------------------------------
# Enumeration


def brute_force_states(low, dom, formula):
    """Independent oracle: filter the full truth table of all extensions."""
    atoms = [
        (name, tup)
        for name, arity in low.fluents.items()
        for tup in product(dom.objects, repeat=arity)
    ]
    out = []
    for bits in product([False, True], repeat=len(atoms)):
        ext = {name: set() for name in low.fluents}
        for (name, tup), b in zip(atoms, bits):
            if b:
                ext[name].add(tup)
        s = FiniteState(dom, ext)
        if eval_formula(s, {}, formula):
            out.append(s)
    return out


@pytest.mark.parametrize("extras", [[], ["o1"], ["o1", "o2"]])
def test_enumerate_matches_brute_force(low, extras):
    dom = domain_for(low, extras)
    goal = conj((low.init, *low.constraints))
    fast = enumerate_states(low, dom, goal)
    slow = brute_force_states(low, dom, goal)
    assert set(fast) == set(slow)
    assert len(fast) == len(slow)


def admissible_tower_count(n):
    """Closed form for the tower world: partitions of n labeled blocks into
    ordered towers (A000262), minus those whose designated block is a top."""

    def sets_of_lists(k):
        total = 0
        for parts in range(k + 1):
            if k == 0:
                return 1
            if parts == 0:
                continue
            total += (
                math.factorial(k)
                // math.factorial(parts)
                * math.comb(k - 1, parts - 1)
            )
        return total

    total = sets_of_lists(n)
    c_on_top = sum(
        math.perm(n - 1, j) * sets_of_lists(n - 1 - j) for j in range(n)
    )
    return total - c_on_top


@pytest.mark.parametrize("extras,expected", [(2, 6), (3, 39), (4, 292)])
def test_admissible_initials_match_closed_form(low, extras, expected):
    assert admissible_tower_count(extras + 1) == expected  # formula sanity
    dom = domain_for(low, [f"o{i}" for i in range(1, extras + 1)])
    goal = conj((low.init, *low.constraints))
    found = enumerate_states(low, dom, goal)
    assert len(found) == expected


def test_enumerate_deterministic_and_sparse_first(low):
    dom = domain_for(low, ["o1"])
    from absynth.syntax import Top

    all_states = enumerate_states(low, dom, Top())
    assert all_states[0] == empty_state(low, dom)
    assert all_states == enumerate_states(low, dom, Top())
    assert len(all_states) == 2 ** 6  # holding: 2 atoms, on: 4 atoms


def test_enumerate_limit_probe(low):
    dom = domain_for(low, ["o1", "o2"])
    goal = conj((low.init, *low.constraints))
    probe = enumerate_states(low, dom, goal, limit=1)
    assert len(probe) == 1
    assert probe[0] == enumerate_states(low, dom, goal)[0]


def test_enumerate_budget_error(low):
    dom = domain_for(low, ["o1", "o2", "o3"])
    goal = conj((low.init, *low.constraints))
    with pytest.raises(BudgetError):
        enumerate_states(low, dom, goal, budget=50)


def test_enumerate_requires_closed_formula(low):
    dom = domain_for(low, ["o1"])
    sig = signature_of(low, dom.objects)
    open_f = parse_formula("holding(x)", sig, scope=("x",))
    with pytest.raises(SemanticsError, match="closed"):
        enumerate_states(low, dom, open_f)


# ---------------------------------------------------------------------------
# Instances and abstraction


def test_instance_state(low, instances):
    dom, s = instance_state(low, instances["tower4"])
    assert dom.objects == ("C", "B1", "B2", "B3")
    assert s.atom("on", ("B3", "C"))
    assert not s.atom("holding", ("B1",))


def test_abstract_state(low, mapping, instances):
    for name, want in [("tower2", 1), ("tower4", 3), ("tower6", 5)]:
        _, s = instance_state(low, instances[name])
        a = abstract_state(mapping, s)
        assert a == AbstractState.make({"Holding": False}, {"Num": want})


def test_abstract_state_after_pick(low, mapping, instances):
    _, s = instance_state(low, instances["tower3"])
    (s2,) = do_program(low, s, mapping.actions["PickAboveC"])
    assert abstract_state(mapping, s2) == AbstractState.make(
        {"Holding": True}, {"Num": 1}
    )
