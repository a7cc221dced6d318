"""Abstract syntax for situation-suppressed formulas, integer terms, and programs.

Formulas are uniform: fluents carry no situation argument, so a formula is
evaluated against a single state. Three syntactic categories share one node
vocabulary: terms (integer- or object-sorted), formulas, and programs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import AbstractSet, Iterable, Mapping, Union


class Sort(enum.Enum):
    OBJECT = "object"
    INTEGER = "integer"

    def __repr__(self) -> str:
        return self.name


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class IntConst:
    value: int


@dataclass(frozen=True)
class ObjConst:
    name: str


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort = Sort.OBJECT


@dataclass(frozen=True)
class Add:
    left: Term
    right: Term


@dataclass(frozen=True)
class Sub:
    left: Term
    right: Term


@dataclass(frozen=True)
class FluentFn:
    """Functional fluent reference (integer-valued, no object arguments)."""

    name: str


@dataclass(frozen=True)
class Count:
    """Counting term: number of object tuples satisfying the body."""

    vars: tuple[Var, ...]
    body: Formula


Term = Union[IntConst, ObjConst, Var, Add, Sub, FluentFn, Count]


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class PredFluent:
    """Predicate fluent atom; high-level fluents have an empty argument tuple."""

    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Lt:
    left: Term
    right: Term


@dataclass(frozen=True)
class CongMod:
    """Congruence modulo a fixed positive constant."""

    modulus: int
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: Formula


@dataclass(frozen=True)
class And:
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or:
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Exists:
    var: Var
    body: Formula


@dataclass(frozen=True)
class Forall:
    var: Var
    body: Formula


@dataclass(frozen=True)
class TC:
    """Reflexive transitive closure of the relation the body defines.

    xs and ys are the designated tuples bound in body; src and dst are the
    applied argument tuples. All four have the same positive arity.
    """

    xs: tuple[Var, ...]
    ys: tuple[Var, ...]
    body: Formula
    src: tuple[Term, ...]
    dst: tuple[Term, ...]


Formula = Union[Top, Bot, PredFluent, Eq, Lt, CongMod, Not, And, Or, Exists, Forall, TC]


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Act:
    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Test:
    cond: Formula


@dataclass(frozen=True)
class Seq:
    first: Program
    second: Program


@dataclass(frozen=True)
class Choice:
    left: Program
    right: Program


@dataclass(frozen=True)
class Pick:
    var: Var
    body: Program


@dataclass(frozen=True)
class Star:
    body: Program


Program = Union[Nil, Act, Test, Seq, Choice, Pick, Star]

Node = Union[Term, Formula, Program]


# ---------------------------------------------------------------------------
# Constructors


def conj(parts: Iterable[Formula]) -> Formula:
    parts = [p for p in parts]
    if not parts:
        return Top()
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


def disj(parts: Iterable[Formula]) -> Formula:
    parts = [p for p in parts]
    if not parts:
        return Bot()
    if len(parts) == 1:
        return parts[0]
    return Or(tuple(parts))


def implies(a: Formula, b: Formula) -> Formula:
    return Or((Not(a), b))


def ne(a: Term, b: Term) -> Formula:
    return Not(Eq(a, b))


def le(a: Term, b: Term) -> Formula:
    # e1 <= e2 abbreviates e1 = e2 or e1 < e2
    return Or((Eq(a, b), Lt(a, b)))


def ge(a: Term, b: Term) -> Formula:
    return le(b, a)


def gt(a: Term, b: Term) -> Formula:
    return Lt(b, a)


def sort_of(t: Term) -> Sort:
    """The sort a term denotes in (object variables default to OBJECT)."""
    if isinstance(t, (IntConst, FluentFn, Add, Sub, Count)):
        return Sort.INTEGER
    if isinstance(t, ObjConst):
        return Sort.OBJECT
    if isinstance(t, Var):
        return t.sort
    raise TypeError(f"not a term: {t!r}")


def tuple_ne(xs: tuple[Term, ...], ys: tuple[Term, ...]) -> Formula:
    return disj([ne(x, y) for x, y in zip(xs, ys)])


def strict_tc(pred: str, arity: int, args: tuple[Term, ...]) -> Formula:
    """Strict closure sugar: pred+(args) is pred*(args) plus tuple inequality."""
    k = arity // 2
    xs = tuple(Var(f"u{i}") for i in range(k))
    ys = tuple(Var(f"v{i}") for i in range(k))
    body = PredFluent(pred, xs + ys)
    src, dst = args[:k], args[k:]
    return And((TC(xs, ys, body, src, dst), tuple_ne(src, dst)))


def reflexive_tc(pred: str, arity: int, args: tuple[Term, ...]) -> TC:
    k = arity // 2
    xs = tuple(Var(f"u{i}") for i in range(k))
    ys = tuple(Var(f"v{i}") for i in range(k))
    return TC(xs, ys, PredFluent(pred, xs + ys), args[:k], args[k:])


# ---------------------------------------------------------------------------
# Free variables


def free_vars(node: Node) -> frozenset[Var]:
    out: set[Var] = set()
    _free(node, frozenset(), out)
    return frozenset(out)


def _free(node: Node, bound: frozenset[str], out: set[Var]) -> None:
    if isinstance(node, Var):
        if node.name not in bound:
            out.add(node)
    elif isinstance(node, (IntConst, ObjConst, FluentFn, Top, Bot, Nil)):
        pass
    elif isinstance(node, (Add, Sub)):
        _free(node.left, bound, out)
        _free(node.right, bound, out)
    elif isinstance(node, Count):
        inner = bound | {v.name for v in node.vars}
        _free(node.body, inner, out)
    elif isinstance(node, (PredFluent, Act)):
        for a in node.args:
            _free(a, bound, out)
    elif isinstance(node, (Eq, Lt)):
        _free(node.left, bound, out)
        _free(node.right, bound, out)
    elif isinstance(node, CongMod):
        _free(node.left, bound, out)
        _free(node.right, bound, out)
    elif isinstance(node, Not):
        _free(node.body, bound, out)
    elif isinstance(node, (And, Or)):
        for a in node.args:
            _free(a, bound, out)
    elif isinstance(node, (Exists, Forall)):
        _free(node.body, bound | {node.var.name}, out)
    elif isinstance(node, TC):
        inner = bound | {v.name for v in node.xs} | {v.name for v in node.ys}
        _free(node.body, inner, out)
        for t in node.src + node.dst:
            _free(t, bound, out)
    elif isinstance(node, Test):
        _free(node.cond, bound, out)
    elif isinstance(node, Seq):
        _free(node.first, bound, out)
        _free(node.second, bound, out)
    elif isinstance(node, Choice):
        _free(node.left, bound, out)
        _free(node.right, bound, out)
    elif isinstance(node, Pick):
        _free(node.body, bound | {node.var.name}, out)
    elif isinstance(node, Star):
        _free(node.body, bound, out)
    else:
        raise TypeError(f"not a syntax node: {node!r}")


# ---------------------------------------------------------------------------
# Substitution


def substitute(node: Node, subst: Mapping[str, Term]) -> Node:
    """Replace free variables by terms, renaming bound variables on capture."""
    if not subst:
        return node
    return _subst(node, dict(subst))


def _subst_names(subst: Mapping[str, Term]) -> set[str]:
    names: set[str] = set()
    for t in subst.values():
        names.update(v.name for v in free_vars(t))
    return names


def _fresh(base: str, taken: set[str]) -> str:
    name = base + "'"
    while name in taken:
        name += "'"
    return name


def _rebind(var: Var, body: Node, subst: Mapping[str, Term]) -> tuple[Var, Node, dict]:
    inner = {k: v for k, v in subst.items() if k != var.name}
    if not inner:
        return var, body, inner
    clash = _subst_names(inner)
    if var.name in clash:
        taken = clash | set(inner) | {v.name for v in free_vars(body)}
        nv = Var(_fresh(var.name, taken), var.sort)
        body = _subst(body, {var.name: nv})
        return nv, body, inner
    return var, body, inner


def _rebind_many(vars_: tuple[Var, ...], body: Node, subst: Mapping[str, Term]):
    new_vars = []
    for v in vars_:
        v2, body, subst = _rebind(v, body, subst)
        new_vars.append(v2)
    return tuple(new_vars), body, subst


def _subst(node: Node, subst: Mapping[str, Term]) -> Node:
    if isinstance(node, Var):
        return subst.get(node.name, node)
    if isinstance(node, (IntConst, ObjConst, FluentFn, Top, Bot, Nil)):
        return node
    if isinstance(node, Add):
        return Add(_subst(node.left, subst), _subst(node.right, subst))
    if isinstance(node, Sub):
        return Sub(_subst(node.left, subst), _subst(node.right, subst))
    if isinstance(node, Count):
        vs, body, inner = _rebind_many(node.vars, node.body, subst)
        return Count(vs, _subst(body, inner) if inner else body)
    if isinstance(node, PredFluent):
        return PredFluent(node.name, tuple(_subst(a, subst) for a in node.args))
    if isinstance(node, Act):
        return Act(node.name, tuple(_subst(a, subst) for a in node.args))
    if isinstance(node, Eq):
        return Eq(_subst(node.left, subst), _subst(node.right, subst))
    if isinstance(node, Lt):
        return Lt(_subst(node.left, subst), _subst(node.right, subst))
    if isinstance(node, CongMod):
        return CongMod(node.modulus, _subst(node.left, subst), _subst(node.right, subst))
    if isinstance(node, Not):
        return Not(_subst(node.body, subst))
    if isinstance(node, And):
        return And(tuple(_subst(a, subst) for a in node.args))
    if isinstance(node, Or):
        return Or(tuple(_subst(a, subst) for a in node.args))
    if isinstance(node, Exists):
        v, body, inner = _rebind(node.var, node.body, subst)
        return Exists(v, _subst(body, inner) if inner else body)
    if isinstance(node, Forall):
        v, body, inner = _rebind(node.var, node.body, subst)
        return Forall(v, _subst(body, inner) if inner else body)
    if isinstance(node, TC):
        src = tuple(_subst(t, subst) for t in node.src)
        dst = tuple(_subst(t, subst) for t in node.dst)
        vs, body, inner = _rebind_many(node.xs + node.ys, node.body, subst)
        k = len(node.xs)
        body = _subst(body, inner) if inner else body
        return TC(vs[:k], vs[k:], body, src, dst)
    if isinstance(node, Test):
        return Test(_subst(node.cond, subst))
    if isinstance(node, Seq):
        return Seq(_subst(node.first, subst), _subst(node.second, subst))
    if isinstance(node, Choice):
        return Choice(_subst(node.left, subst), _subst(node.right, subst))
    if isinstance(node, Pick):
        v, body, inner = _rebind(node.var, node.body, subst)
        return Pick(v, _subst(body, inner) if inner else body)
    if isinstance(node, Star):
        return Star(_subst(node.body, subst))
    raise TypeError(f"not a syntax node: {node!r}")


# ---------------------------------------------------------------------------
# Alpha equivalence


def alpha_equal(a: Node, b: Node) -> bool:
    return _alpha(a, b, {}, {}, 0)


def _alpha(a: Node, b: Node, ea: dict, eb: dict, depth: int) -> bool:
    # ea/eb map bound names to the depth index of their binder, so two nodes
    # match exactly when their binding structures coincide positionally.
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ia, ib = ea.get(a.name), eb.get(b.name)
        if ia is None and ib is None:
            return a == b
        return ia is not None and ia == ib and a.sort == b.sort
    if isinstance(a, (IntConst, ObjConst, FluentFn, Top, Bot, Nil)):
        return a == b
    if isinstance(a, (Add, Sub, Eq, Lt)):
        return _alpha(a.left, b.left, ea, eb, depth) and _alpha(
            a.right, b.right, ea, eb, depth
        )
    if isinstance(a, CongMod):
        return (
            a.modulus == b.modulus
            and _alpha(a.left, b.left, ea, eb, depth)
            and _alpha(a.right, b.right, ea, eb, depth)
        )
    if isinstance(a, Count):
        if len(a.vars) != len(b.vars):
            return False
        ea2, eb2 = dict(ea), dict(eb)
        for i, (va, vb) in enumerate(zip(a.vars, b.vars)):
            ea2[va.name] = depth + i
            eb2[vb.name] = depth + i
        return _alpha(a.body, b.body, ea2, eb2, depth + len(a.vars))
    if isinstance(a, (PredFluent, Act)):
        return (
            a.name == b.name
            and len(a.args) == len(b.args)
            and all(_alpha(x, y, ea, eb, depth) for x, y in zip(a.args, b.args))
        )
    if isinstance(a, Not):
        return _alpha(a.body, b.body, ea, eb, depth)
    if isinstance(a, (And, Or)):
        return len(a.args) == len(b.args) and all(
            _alpha(x, y, ea, eb, depth) for x, y in zip(a.args, b.args)
        )
    if isinstance(a, (Exists, Forall, Pick)):
        if a.var.sort != b.var.sort:
            return False
        ea2 = dict(ea)
        eb2 = dict(eb)
        ea2[a.var.name] = depth
        eb2[b.var.name] = depth
        return _alpha(a.body, b.body, ea2, eb2, depth + 1)
    if isinstance(a, TC):
        if len(a.xs) != len(b.xs) or len(a.ys) != len(b.ys):
            return False
        if not all(_alpha(x, y, ea, eb, depth) for x, y in zip(a.src, b.src)):
            return False
        if not all(_alpha(x, y, ea, eb, depth) for x, y in zip(a.dst, b.dst)):
            return False
        ea2, eb2 = dict(ea), dict(eb)
        for i, (va, vb) in enumerate(zip(a.xs + a.ys, b.xs + b.ys)):
            ea2[va.name] = depth + i
            eb2[vb.name] = depth + i
        return _alpha(a.body, b.body, ea2, eb2, depth + 2 * len(a.xs))
    if isinstance(a, Test):
        return _alpha(a.cond, b.cond, ea, eb, depth)
    if isinstance(a, Seq):
        return _alpha(a.first, b.first, ea, eb, depth) and _alpha(
            a.second, b.second, ea, eb, depth
        )
    if isinstance(a, Choice):
        return _alpha(a.left, b.left, ea, eb, depth) and _alpha(
            a.right, b.right, ea, eb, depth
        )
    if isinstance(a, Star):
        return _alpha(a.body, b.body, ea, eb, depth)
    raise TypeError(f"not a syntax node: {a!r}")


# ---------------------------------------------------------------------------
# Total syntactic order


_RANK = {
    IntConst: 0,
    ObjConst: 1,
    Var: 2,
    Add: 3,
    Sub: 4,
    FluentFn: 5,
    Count: 6,
    Top: 10,
    Bot: 11,
    PredFluent: 12,
    Eq: 13,
    Lt: 14,
    CongMod: 15,
    Not: 16,
    And: 17,
    Or: 18,
    Exists: 19,
    Forall: 20,
    TC: 21,
    Nil: 30,
    Act: 31,
    Test: 32,
    Seq: 33,
    Choice: 34,
    Pick: 35,
    Star: 36,
}


def ast_key(node: Node) -> tuple:
    """Deterministic total order key used to sort commutative operands."""
    r = _RANK[type(node)]
    if isinstance(node, IntConst):
        return (r, node.value)
    if isinstance(node, (ObjConst, FluentFn)):
        return (r, node.name)
    if isinstance(node, Var):
        return (r, node.name, node.sort.value)
    if isinstance(node, (Add, Sub, Eq, Lt)):
        return (r, ast_key(node.left), ast_key(node.right))
    if isinstance(node, CongMod):
        return (r, node.modulus, ast_key(node.left), ast_key(node.right))
    if isinstance(node, Count):
        return (r, tuple(ast_key(v) for v in node.vars), ast_key(node.body))
    if isinstance(node, (Top, Bot, Nil)):
        return (r,)
    if isinstance(node, (PredFluent, Act)):
        return (r, node.name, tuple(ast_key(a) for a in node.args))
    if isinstance(node, Not):
        return (r, ast_key(node.body))
    if isinstance(node, (And, Or)):
        return (r, tuple(ast_key(a) for a in node.args))
    if isinstance(node, (Exists, Forall)):
        return (r, ast_key(node.var), ast_key(node.body))
    if isinstance(node, TC):
        return (
            r,
            tuple(ast_key(v) for v in node.xs),
            tuple(ast_key(v) for v in node.ys),
            ast_key(node.body),
            tuple(ast_key(t) for t in node.src),
            tuple(ast_key(t) for t in node.dst),
        )
    if isinstance(node, Test):
        return (r, ast_key(node.cond))
    if isinstance(node, Seq):
        return (r, ast_key(node.first), ast_key(node.second))
    if isinstance(node, Choice):
        return (r, ast_key(node.left), ast_key(node.right))
    if isinstance(node, Pick):
        return (r, ast_key(node.var), ast_key(node.body))
    if isinstance(node, Star):
        return (r, ast_key(node.body))
    raise TypeError(f"not a syntax node: {node!r}")


# ---------------------------------------------------------------------------
# Normalization


def normalize(node: Node) -> Node:
    """Canonicalize connective nesting without any entailment reasoning.

    Flattens conjunction and disjunction, removes constant units, collapses
    annihilators, deduplicates and sorts commutative operands, and orders the
    operands of = and congruence atoms. Nothing is pruned by entailment.
    """
    if isinstance(node, (IntConst, ObjConst, Var, FluentFn, Top, Bot, Nil)):
        return node
    if isinstance(node, Add):
        return Add(normalize(node.left), normalize(node.right))
    if isinstance(node, Sub):
        return Sub(normalize(node.left), normalize(node.right))
    if isinstance(node, Count):
        return Count(node.vars, normalize(node.body))
    if isinstance(node, PredFluent):
        return PredFluent(node.name, tuple(normalize(a) for a in node.args))
    if isinstance(node, Eq):
        a, b = normalize(node.left), normalize(node.right)
        if ast_key(b) < ast_key(a):
            a, b = b, a
        return Eq(a, b)
    if isinstance(node, Lt):
        return Lt(normalize(node.left), normalize(node.right))
    if isinstance(node, CongMod):
        a, b = normalize(node.left), normalize(node.right)
        if ast_key(b) < ast_key(a):
            a, b = b, a
        return CongMod(node.modulus, a, b)
    if isinstance(node, Not):
        body = normalize(node.body)
        if isinstance(body, Top):
            return Bot()
        if isinstance(body, Bot):
            return Top()
        return Not(body)
    if isinstance(node, (And, Or)):
        flat: list[Formula] = []
        unit, annihilator = (Top, Bot) if isinstance(node, And) else (Bot, Top)
        for a in node.args:
            a = normalize(a)
            if isinstance(a, unit):
                continue
            if isinstance(a, annihilator):
                return annihilator()
            if type(a) is type(node):
                flat.extend(a.args)
            else:
                flat.append(a)
        seen = set()
        uniq = []
        for a in flat:
            k = ast_key(a)
            if k not in seen:
                seen.add(k)
                uniq.append(a)
        uniq.sort(key=ast_key)
        if not uniq:
            return unit()
        if len(uniq) == 1:
            return uniq[0]
        return type(node)(tuple(uniq))
    if isinstance(node, Exists):
        return Exists(node.var, normalize(node.body))
    if isinstance(node, Forall):
        return Forall(node.var, normalize(node.body))
    if isinstance(node, TC):
        return TC(
            node.xs,
            node.ys,
            normalize(node.body),
            tuple(normalize(t) for t in node.src),
            tuple(normalize(t) for t in node.dst),
        )
    if isinstance(node, Act):
        return Act(node.name, tuple(normalize(a) for a in node.args))
    if isinstance(node, Test):
        return Test(normalize(node.cond))
    if isinstance(node, Seq):
        return Seq(normalize(node.first), normalize(node.second))
    if isinstance(node, Choice):
        return Choice(normalize(node.left), normalize(node.right))
    if isinstance(node, Pick):
        return Pick(node.var, normalize(node.body))
    if isinstance(node, Star):
        return Star(normalize(node.body))
    raise TypeError(f"not a syntax node: {node!r}")


# ---------------------------------------------------------------------------
# Linear integer arithmetic fragment


def is_lia_term(t: Term, fns: AbstractSet[str] | None = None) -> bool:
    """True iff t is a linear sum of integer constants and integer fluents.

    When ``fns`` is given, only those functional-fluent names are admitted.
    """
    if isinstance(t, IntConst):
        return True
    if isinstance(t, FluentFn):
        return fns is None or t.name in fns
    if isinstance(t, Var):
        return t.sort is Sort.INTEGER
    if isinstance(t, (Add, Sub)):
        return is_lia_term(t.left, fns) and is_lia_term(t.right, fns)
    return False


def is_lia_definable(
    f: Formula,
    preds: AbstractSet[str] | None = None,
    fns: AbstractSet[str] | None = None,
) -> bool:
    """True iff f stays inside the quantifier-free linear integer fragment.

    Allowed: truth constants, zero-ary predicate fluent atoms, =, <, and
    congruence atoms over integer terms, and Boolean connectives. Object
    quantification, counting terms, and transitive closure are excluded.
    When ``preds`` or ``fns`` are given, atoms must use those names only.
    """
    if isinstance(f, (Top, Bot)):
        return True
    if isinstance(f, PredFluent):
        return len(f.args) == 0 and (preds is None or f.name in preds)
    if isinstance(f, (Eq, Lt)):
        return is_lia_term(f.left, fns) and is_lia_term(f.right, fns)
    if isinstance(f, CongMod):
        return is_lia_term(f.left, fns) and is_lia_term(f.right, fns)
    if isinstance(f, Not):
        return is_lia_definable(f.body, preds, fns)
    if isinstance(f, (And, Or)):
        return all(is_lia_definable(a, preds, fns) for a in f.args)
    return False
