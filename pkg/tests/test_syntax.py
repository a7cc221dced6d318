"""Formula algebra: substitution, alpha-equivalence, normalization, keys."""

import pytest

from absynth.parser import parse_formula, parse_term
from absynth.syntax import (
    And,
    Bot,
    Count,
    Eq,
    Exists,
    IntConst,
    Lt,
    Not,
    ObjConst,
    Or,
    PredFluent,
    Sort,
    TC,
    Top,
    Var,
    alpha_equal,
    ast_key,
    conj,
    disj,
    free_vars,
    ge,
    implies,
    is_lia_definable,
    le,
    ne,
    normalize,
    reflexive_tc,
    sort_of,
    strict_tc,
    substitute,
)

x, y, z = Var("x"), Var("y"), Var("z")


def P(*args):
    return PredFluent("p", tuple(args))


def test_free_vars_basic():
    f = Exists(x, And((P(x, y), P(z, z))))
    assert free_vars(f) == frozenset({y, z})


def test_free_vars_count_and_tc():
    c = Count((x,), P(x, y))
    assert free_vars(Lt(IntConst(0), c)) == frozenset({y})
    t = TC((x,), (y,), P(x, y), (Var("u"),), (Var("v"),))
    assert free_vars(t) == frozenset({Var("u"), Var("v")})


def test_substitute_free_occurrence():
    f = And((P(x), Exists(x, P(x))))
    g = substitute(f, {"x": ObjConst("A")})
    assert g == And((P(ObjConst("A")), Exists(x, P(x))))


def test_substitute_capture_avoidance():
    # Substituting y := x under a binder for x must rename the binder.
    f = Exists(x, P(x, y))
    g = substitute(f, {"y": x})
    assert isinstance(g, Exists)
    assert g.var.name != "x"  # binder renamed away from the incoming x
    assert alpha_equal(g, Exists(z, P(z, x)))
    assert not alpha_equal(g, Exists(x, P(x, x)))  # capture would look like this


def test_alpha_equal_binders():
    assert alpha_equal(Exists(x, P(x)), Exists(y, P(y)))
    assert not alpha_equal(Exists(x, P(x)), Exists(y, P(x)))
    a = Count((x,), P(x, y))
    b = Count((z,), P(z, y))
    assert alpha_equal(Eq(a, a), Eq(b, b))


def test_normalize_flattens_sorts_dedupes():
    f = And((P(y), And((P(x), P(y))), Top()))
    g = normalize(f)
    assert isinstance(g, And)
    assert len(g.args) == 2
    assert list(g.args) == sorted(g.args, key=ast_key)
    assert normalize(g) == g  # idempotent


def test_normalize_units_and_annihilators():
    assert normalize(And((Top(), Top()))) == Top()
    assert normalize(And((P(x), Bot()))) == Bot()
    assert normalize(Or((Bot(), P(x)))) == P(x)
    assert normalize(Or((Top(), P(x)))) == Top()
    assert normalize(Not(Top())) == Bot()
    assert normalize(Not(Bot())) == Top()


def test_normalize_singleton_collapse():
    assert normalize(And((P(x),))) == P(x)
    assert normalize(disj([P(x)])) == P(x)


def test_conj_disj_empty():
    assert conj([]) == Top()
    assert disj([]) == Bot()


def test_sugar_shapes():
    n = parse_term("Num", None)
    assert le(IntConst(0), n) == Or((Eq(IntConst(0), n), Lt(IntConst(0), n)))
    assert ge(n, IntConst(1)) == le(IntConst(1), n)
    assert ne(x, y) == Not(Eq(x, y))
    assert implies(P(x), P(y)) == Or((Not(P(x)), P(y)))


def test_tc_sugar():
    plain = reflexive_tc("on", 2, (x, y))
    assert isinstance(plain, TC)
    strict = strict_tc("on", 2, (x, y))
    # Strict closure is the reflexive closure conjoined with distinctness.
    assert isinstance(strict, And)
    kinds = {type(a) for a in strict.args}
    assert kinds == {TC, Not}


def test_sort_of():
    assert sort_of(x) is Sort.OBJECT
    assert sort_of(ObjConst("C")) is Sort.OBJECT
    assert sort_of(IntConst(3)) is Sort.INTEGER
    assert sort_of(parse_term("Num + 1", None)) is Sort.INTEGER


def test_ast_key_total_order():
    samples = [
        Top(),
        Bot(),
        P(x),
        P(y),
        Eq(x, y),
        Lt(IntConst(0), IntConst(1)),
        Not(P(x)),
        And((P(x), P(y))),
        Or((P(x), P(y))),
        Exists(x, P(x)),
        reflexive_tc("on", 2, (x, y)),
    ]
    keys = [ast_key(s) for s in samples]
    assert len(set(keys)) == len(keys)
    sorted(samples, key=ast_key)  # must not raise


def test_ast_key_deterministic():
    f = normalize(Exists(x, And((P(x, y), Lt(IntConst(0), IntConst(2))))))
    assert ast_key(f) == ast_key(normalize(Exists(x, And((P(x, y), Lt(IntConst(0), IntConst(2)))))))


def test_is_lia_definable():
    good = parse_formula("Num > 0 && Num ~2~ 1", None)
    assert is_lia_definable(good)
    with_pred_arg = PredFluent("Holding", (x,))
    assert not is_lia_definable(with_pred_arg)
    assert not is_lia_definable(Exists(x, PredFluent("Holding", ())))


def test_normalize_orients_eq():
    a = Eq(parse_term("Num", None), IntConst(0))
    b = Eq(IntConst(0), parse_term("Num", None))
    assert normalize(a) == normalize(b)
