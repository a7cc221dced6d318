"""Finite-structure semantics: evaluation, successor states, and reachability.

Formulas are evaluated over explicit finite domains with a three-valued
(Kleene) engine.  Complete states give classical two-valued answers; partial
states may answer "unknown", which drives the backtracking state enumerator
with sound pruning.  Integer terms evaluate to intervals that collapse to
exact values on complete states.

Object quantifiers range over the domain; integer quantification does not
exist in the language.  Transitive closure is reflexive and computed by
breadth-first search; counting terms enumerate object tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterable, Iterator, Mapping

from .mapping import RefinementMapping
from .syntax import (
    Act,
    Add,
    And,
    Bot,
    Choice,
    CongMod,
    Count,
    Eq,
    Exists,
    FluentFn,
    Forall,
    Formula,
    IntConst,
    Lt,
    Nil,
    Not,
    ObjConst,
    Or,
    Pick,
    PredFluent,
    Program,
    Seq,
    Sort,
    Star,
    Sub,
    TC,
    Term,
    Test,
    Top,
    Var,
    free_vars,
)
from .theory import HighLIBAT, Instance, LowBAT


class SemanticsError(ValueError):
    """Raised on ill-formed evaluation requests (unknown symbols, bad sorts)."""


class BudgetError(RuntimeError):
    """Raised when a bounded search would exceed its node budget.

    Raised instead of returning a truncated result, so callers can tell
    "nothing found" from "search too large".
    """


@dataclass(frozen=True)
class FiniteDomain:
    """An ordered finite set of named objects."""

    objects: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.objects:
            raise SemanticsError("domain must contain at least one object")
        if len(set(self.objects)) != len(self.objects):
            raise SemanticsError("domain objects must be distinct")

    @property
    def size(self) -> int:
        return len(self.objects)


def domain_for(low: LowBAT, extra: Iterable[str] = ()) -> FiniteDomain:
    """A domain holding the theory's constants plus extra objects, in order."""
    return FiniteDomain(tuple(low.constants) + tuple(extra))


class FiniteState:
    """A complete interpretation of the low-level predicate fluents.

    Value-immutable: equality and hashing use the extension contents.  A
    private cache holds transitive-closure relations computed on demand.
    """

    __slots__ = ("domain", "_ext", "_key", "_hash", "_tc_cache")

    def __init__(
        self,
        domain: FiniteDomain,
        pred_ext: Mapping[str, Iterable[tuple[str, ...]]],
    ):
        self.domain = domain
        self._ext = {
            name: frozenset(tuple(t) for t in tuples)
            for name, tuples in pred_ext.items()
        }
        self._key = (
            domain.objects,
            tuple(sorted((n, tuple(sorted(ts))) for n, ts in self._ext.items())),
        )
        self._hash = hash(self._key)
        self._tc_cache: dict = {}

    @property
    def objects(self) -> tuple[str, ...]:
        return self.domain.objects

    @property
    def pred_ext(self) -> dict[str, frozenset[tuple[str, ...]]]:
        return dict(self._ext)

    def atom(self, name: str, args: tuple[str, ...]):
        ext = self._ext.get(name)
        if ext is None:
            raise SemanticsError(f"undeclared fluent {name}")
        return args in ext

    def fn(self, name: str) -> int:
        raise SemanticsError(f"no integer fluent {name} at the low level")

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteState) and self._key == other._key

    def __lt__(self, other) -> bool:
        return self._key < other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        atoms = ", ".join(
            f"{n}({', '.join(t)})"
            for n, ts in sorted(self._ext.items())
            for t in sorted(ts)
        )
        return f"<state {atoms or 'empty'}>"


@dataclass(frozen=True, order=True)
class AbstractState:
    """Truth values and integer values of all high-level fluents."""

    pred_vals: tuple[tuple[str, bool], ...]
    fn_vals: tuple[tuple[str, int], ...]

    @staticmethod
    def make(preds: Mapping[str, bool], fns: Mapping[str, int]) -> "AbstractState":
        return AbstractState(
            tuple(sorted((n, bool(v)) for n, v in preds.items())),
            tuple(sorted((n, int(v)) for n, v in fns.items())),
        )

    @cached_property
    def _preds(self) -> dict[str, bool]:
        return dict(self.pred_vals)

    @cached_property
    def _fns(self) -> dict[str, int]:
        return dict(self.fn_vals)

    @property
    def objects(self) -> tuple[str, ...]:
        raise SemanticsError("high-level states have no object domain")

    def atom(self, name: str, args: tuple[str, ...]):
        if args:
            raise SemanticsError(f"high-level fluent {name} takes no arguments")
        if name not in self._preds:
            raise SemanticsError(f"undeclared fluent {name}")
        return self._preds[name]

    def fn(self, name: str) -> int:
        if name not in self._fns:
            raise SemanticsError(f"undeclared fluent {name}")
        return self._fns[name]

    def truth(self, name: str) -> bool:
        return self.atom(name, ())

    def value(self, name: str) -> int:
        return self.fn(name)

    def __repr__(self) -> str:
        parts = [f"{n}={'T' if v else 'F'}" for n, v in self.pred_vals]
        parts += [f"{n}={v}" for n, v in self.fn_vals]
        return "<" + " ".join(parts) + ">"


class _PartialState:
    """A low-level state with some atoms still undetermined."""

    __slots__ = ("domain", "fluents", "assigned")

    def __init__(self, domain: FiniteDomain, fluents: Iterable[str]):
        self.domain = domain
        self.fluents = frozenset(fluents)
        self.assigned: dict[tuple[str, tuple[str, ...]], bool] = {}

    @property
    def objects(self) -> tuple[str, ...]:
        return self.domain.objects

    def atom(self, name: str, args: tuple[str, ...]):
        if name not in self.fluents:
            raise SemanticsError(f"undeclared fluent {name}")
        return self.assigned.get((name, args))

    def fn(self, name: str) -> int:
        raise SemanticsError(f"no integer fluent {name} at the low level")


# ---------------------------------------------------------------------------
# Three-valued evaluation


def _band(values) -> bool | None:
    out: bool | None = True
    for v in values:
        if v is False:
            return False
        if v is None:
            out = None
    return out


def _bor(values) -> bool | None:
    out: bool | None = False
    for v in values:
        if v is True:
            return True
        if v is None:
            out = None
    return out


def _obj(t: Term, st, env: dict) -> str:
    if isinstance(t, Var):
        if t.name not in env:
            raise SemanticsError(f"unbound variable {t.name}")
        return env[t.name]
    if isinstance(t, ObjConst):
        if t.name not in st.objects:
            raise SemanticsError(f"object {t.name} is not in the domain")
        return t.name
    raise SemanticsError(f"not an object term: {t!r}")


def _t3(t: Term, st, env: dict):
    """Evaluate a term to an object name or an integer interval (lo, hi)."""
    if isinstance(t, IntConst):
        return (t.value, t.value)
    if isinstance(t, FluentFn):
        v = st.fn(t.name)
        return (v, v)
    if isinstance(t, (Var, ObjConst)):
        return _obj(t, st, env)
    if isinstance(t, Add):
        a, b = _t3(t.left, st, env), _t3(t.right, st, env)
        _want_interval(a, t), _want_interval(b, t)
        return (a[0] + b[0], a[1] + b[1])
    if isinstance(t, Sub):
        a, b = _t3(t.left, st, env), _t3(t.right, st, env)
        _want_interval(a, t), _want_interval(b, t)
        return (a[0] - b[1], a[1] - b[0])
    if isinstance(t, Count):
        lo = hi = 0
        names = [v.name for v in t.vars]
        saved = [env.get(n) for n in names]
        for tup in product(st.objects, repeat=len(names)):
            for n, o in zip(names, tup):
                env[n] = o
            v = _f3(t.body, st, env)
            if v is True:
                lo += 1
                hi += 1
            elif v is None:
                hi += 1
        _restore(env, names, saved)
        return (lo, hi)
    raise SemanticsError(f"not a term: {t!r}")


def _want_interval(v, where) -> None:
    if isinstance(v, str):
        raise SemanticsError(f"object term used in arithmetic: {where!r}")


def _restore(env: dict, names, saved) -> None:
    for n, old in zip(names, saved):
        if old is None:
            env.pop(n, None)
        else:
            env[n] = old


def _f3(f: Formula, st, env: dict):
    if isinstance(f, PredFluent):
        args = tuple(_obj(a, st, env) for a in f.args)
        return st.atom(f.name, args)
    if isinstance(f, And):
        return _band(_f3(a, st, env) for a in f.args)
    if isinstance(f, Or):
        return _bor(_f3(a, st, env) for a in f.args)
    if isinstance(f, Not):
        v = _f3(f.body, st, env)
        return None if v is None else not v
    if isinstance(f, (Eq, Lt)):
        a = _t3(f.left, st, env)
        b = _t3(f.right, st, env)
        if isinstance(a, str) or isinstance(b, str):
            if not (isinstance(a, str) and isinstance(b, str)):
                raise SemanticsError(f"sort mismatch in {f!r}")
            if isinstance(f, Lt):
                raise SemanticsError("order comparison needs integer terms")
            return a == b
        if isinstance(f, Eq):
            if a[0] == a[1] == b[0] == b[1]:
                return True
            if a[1] < b[0] or b[1] < a[0]:
                return False
            return None
        if a[1] < b[0]:
            return True
        if a[0] >= b[1]:
            return False
        return None
    if isinstance(f, (Top, Bot)):
        return isinstance(f, Top)
    if isinstance(f, (Exists, Forall)):
        if f.var.sort is not Sort.OBJECT:
            raise SemanticsError("integer quantification is not supported")
        name = f.var.name
        saved = env.get(name)
        want = isinstance(f, Exists)  # the deciding truth value
        out: bool | None = not want
        try:
            for o in st.objects:
                env[name] = o
                v = _f3(f.body, st, env)
                if v is want:
                    return want
                if v is None:
                    out = None
        finally:
            _restore(env, [name], [saved])
        return out
    if isinstance(f, CongMod):
        a = _t3(f.left, st, env)
        b = _t3(f.right, st, env)
        _want_interval(a, f), _want_interval(b, f)
        if a[0] == a[1] and b[0] == b[1]:
            return (a[0] - b[0]) % f.modulus == 0
        return None
    if isinstance(f, TC):
        return _tc3(f, st, env)
    raise SemanticsError(f"not a formula: {f!r}")


@lru_cache(maxsize=None)
def _tc_outer_names(f: TC) -> tuple[str, ...]:
    bound = {v.name for v in f.xs} | {v.name for v in f.ys}
    return tuple(sorted(v.name for v in free_vars(f.body) if v.name not in bound))


def _tc_closure(f: TC, st: "FiniteState", env: dict) -> dict:
    """Strict-reachability sets of the body relation, cached per state."""
    key = (f, tuple((n, env[n]) for n in _tc_outer_names(f)))
    hit = st._tc_cache.get(key)
    if hit is not None:
        return hit
    k = len(f.xs)
    nodes = list(product(st.objects, repeat=k))
    names = [v.name for v in f.xs] + [v.name for v in f.ys]
    saved = [env.get(n) for n in names]
    adj: dict[tuple, list[tuple]] = {a: [] for a in nodes}
    for a in nodes:
        for b in nodes:
            for n, o in zip(names, a + b):
                env[n] = o
            if _f3(f.body, st, env):
                adj[a].append(b)
    _restore(env, names, saved)
    closure: dict[tuple, frozenset] = {}
    for a in nodes:
        seen: set[tuple] = set()
        frontier = adj[a][:]
        while frontier:
            nxt = []
            for b in frontier:
                if b not in seen:
                    seen.add(b)
                    nxt.extend(adj[b])
            frontier = nxt
        closure[a] = frozenset(seen)
    st._tc_cache[key] = closure
    return closure


def _tc3(f: TC, st, env: dict):
    src = tuple(_obj(a, st, env) for a in f.src)
    dst = tuple(_obj(a, st, env) for a in f.dst)
    if src == dst:
        return True
    if isinstance(st, FiniteState):
        return dst in _tc_closure(f, st, env).get(src, ())
    k = len(f.xs)
    tuples = list(product(st.objects, repeat=k))
    names = [v.name for v in f.xs] + [v.name for v in f.ys]
    saved = [env.get(n) for n in names]

    def edge(a: tuple, b: tuple):
        for n, o in zip(names, a + b):
            env[n] = o
        return _f3(f.body, st, env)

    try:
        saw_unknown = False
        seen = {src}
        frontier = [src]
        while frontier:
            nxt = []
            for a in frontier:
                for b in tuples:
                    v = edge(a, b)
                    if v is None:
                        saw_unknown = True
                    if v is True and b not in seen:
                        if b == dst:
                            return True
                        seen.add(b)
                        nxt.append(b)
            frontier = nxt
        if not saw_unknown:
            return False
        seen = {src}
        frontier = [src]
        while frontier:
            nxt = []
            for a in frontier:
                for b in tuples:
                    if b not in seen and edge(a, b) is not False:
                        if b == dst:
                            return None
                        seen.add(b)
                        nxt.append(b)
            frontier = nxt
        return False
    finally:
        _restore(env, names, saved)


# ---------------------------------------------------------------------------
# Public evaluation entry points


def eval_formula(state, assignment: Mapping[str, str], f: Formula) -> bool:
    """Classical truth of a formula over a complete state."""
    v = _f3(f, state, dict(assignment))
    if v is None:
        raise SemanticsError("formula is undetermined on a partial state")
    return v


def eval_term(state, assignment: Mapping[str, str], t: Term):
    """Value of a term over a complete state: an integer or an object name."""
    v = _t3(t, state, dict(assignment))
    if isinstance(v, str):
        return v
    if v[0] != v[1]:
        raise SemanticsError("term is undetermined on a partial state")
    return v[0]


# ---------------------------------------------------------------------------
# Actions: executability and successor states


def _ground_terms(args: Iterable[str]) -> tuple[Term, ...]:
    return tuple(ObjConst(a) for a in args)


def poss(bat, state, action: str, args: tuple[str, ...] = ()) -> bool:
    """Whether one ground action is executable in the state.

    Instantiated preconditions are cached on the theory object; treat
    theories as immutable once evaluation has started (build changed
    variants with dataclasses.replace, not in-place edits).
    """
    if isinstance(bat, LowBAT):
        cache = bat.__dict__.setdefault("_poss_cache", {})
        pre = cache.get((action, args))
        if pre is None:
            pre = bat.precondition(action, _ground_terms(args))
            cache[(action, args)] = pre
        return eval_formula(state, {}, pre)
    if args:
        raise SemanticsError("high-level actions take no arguments")
    return eval_formula(state, {}, bat.precondition(action))


def _effect_conditions(bat: LowBAT, fluent: str, action: str, args: tuple[str, ...]):
    cache = bat.__dict__.setdefault("_effect_cache", {})
    key = (fluent, action, args)
    hit = cache.get(key)
    if hit is None:
        hit = bat.effect_condition(fluent, action, _ground_terms(args))
        cache[key] = hit
    return hit


def successor(bat, state, action: str, args: tuple[str, ...] = ()):
    """The state after one ground action, by the successor-state axioms.

    Does not require the action to be executable; callers gate on poss.
    """
    if isinstance(bat, LowBAT):
        return _successor_low(bat, state, action, args)
    if args:
        raise SemanticsError("high-level actions take no arguments")
    return _successor_high(bat, state, action)


def _successor_low(
    bat: LowBAT, state: FiniteState, action: str, args: tuple[str, ...]
) -> FiniteState:
    if action not in bat.actions:
        raise SemanticsError(f"undeclared action {action}")
    new_ext: dict[str, set[tuple[str, ...]]] = {}
    for fluent, arity in bat.fluents.items():
        plus, minus = _effect_conditions(bat, fluent, action, args)
        old = state._ext[fluent]
        if isinstance(plus, Bot) and isinstance(minus, Bot):
            new_ext[fluent] = set(old)
            continue
        params = [v.name for v in bat.ssas[fluent].params]
        ext: set[tuple[str, ...]] = set()
        for tup in product(state.objects, repeat=arity):
            env = dict(zip(params, tup))
            if eval_formula(state, env, plus):
                ext.add(tup)
            elif tup in old and not eval_formula(state, env, minus):
                ext.add(tup)
        new_ext[fluent] = ext
    return FiniteState(state.domain, new_ext)


def _successor_high(bat: HighLIBAT, state: AbstractState, action: str) -> AbstractState:
    if action not in bat.actions:
        raise SemanticsError(f"undeclared action {action}")
    preds: dict[str, bool] = {}
    for name in bat.preds:
        plus = minus = False
        for clause in bat.pred_ssas[name].clauses:
            if clause.action != action:
                continue
            fired = eval_formula(state, {}, clause.condition)
            if clause.polarity == "add":
                plus = plus or fired
            else:
                minus = minus or fired
        preds[name] = plus or (state.truth(name) and not minus)
    fns: dict[str, int] = {}
    for name in bat.fns:
        clauses = bat.fn_ssas[name].clauses
        relevant = [c for c in clauses if c.action == action]
        if not relevant:
            fns[name] = state.value(name)
            continue
        values = {
            eval_term(state, {}, c.value)
            for c in relevant
            if eval_formula(state, {}, c.condition)
        }
        if len(values) != 1:
            raise SemanticsError(
                f"successor-state axiom for {name} yields "
                f"{len(values)} values under {action}"
            )
        fns[name] = values.pop()
    return AbstractState.make(preds, fns)


def ground_actions(bat, domain: FiniteDomain | None = None) -> Iterator[tuple[str, tuple[str, ...]]]:
    """All ground action instances, in a fixed deterministic order."""
    for name in sorted(bat.actions):
        arity = len(bat.actions[name].params)
        if arity and domain is None:
            raise SemanticsError(f"action {name} needs a domain to ground over")
        if arity == 0:
            yield name, ()
        else:
            for args in product(domain.objects, repeat=arity):
                yield name, args


# ---------------------------------------------------------------------------
# Programs


def do_program(bat: LowBAT, state: FiniteState, p: Program) -> set[FiniteState]:
    """All final states of terminating executions of a closed program."""
    if free_vars(p):
        names = ", ".join(sorted(v.name for v in free_vars(p)))
        raise SemanticsError(f"program is not closed: free {names}")
    return _do(bat, state, p, {})


def _do(bat: LowBAT, state: FiniteState, p: Program, env: dict) -> set[FiniteState]:
    if isinstance(p, Nil):
        return {state}
    if isinstance(p, Act):
        args = tuple(_obj(a, state, env) for a in p.args)
        if poss(bat, state, p.name, args):
            return {successor(bat, state, p.name, args)}
        return set()
    if isinstance(p, Test):
        return {state} if _f3(p.cond, state, env) is True else set()
    if isinstance(p, Seq):
        out: set[FiniteState] = set()
        for mid in _do(bat, state, p.first, env):
            out |= _do(bat, mid, p.second, env)
        return out
    if isinstance(p, Choice):
        return _do(bat, state, p.left, env) | _do(bat, state, p.right, env)
    if isinstance(p, Pick):
        name = p.var.name
        saved = env.get(name)
        out = set()
        for o in state.objects:
            env[name] = o
            out |= _do(bat, state, p.body, env)
        _restore(env, [name], [saved])
        return out
    if isinstance(p, Star):
        acc = {state}
        frontier = [state]
        while frontier:
            nxt = []
            for s in frontier:
                for s2 in _do(bat, s, p.body, env):
                    if s2 not in acc:
                        acc.add(s2)
                        nxt.append(s2)
            frontier = sorted(nxt)
        return acc
    raise SemanticsError(f"not a program: {p!r}")


# ---------------------------------------------------------------------------
# Reachability


def reachable(
    bat: LowBAT,
    domain: FiniteDomain,
    initial: FiniteState,
    step="poss-only",
) -> list[FiniteState]:
    """States reachable from the initial state, deduplicated, in BFS order.

    step selects the transition relation: "poss-only" follows executable
    ground actions, "all-ground" applies every ground action's axioms whether
    executable or not, and a Program value follows the program's final states.
    """
    if isinstance(step, str) and step not in ("poss-only", "all-ground"):
        raise SemanticsError(f"unknown reachability mode {step!r}")
    seen: dict[FiniteState, None] = {initial: None}
    frontier = [initial]
    while frontier:
        nxt = []
        for s in frontier:
            if isinstance(step, str):
                succs = []
                for name, args in ground_actions(bat, domain):
                    if step == "poss-only" and not poss(bat, s, name, args):
                        continue
                    succs.append(successor(bat, s, name, args))
            else:
                succs = sorted(do_program(bat, s, step))
            for s2 in succs:
                if s2 not in seen:
                    seen[s2] = None
                    nxt.append(s2)
        frontier = nxt
    return list(seen)


# ---------------------------------------------------------------------------
# Abstraction


def abstract_state(m: RefinementMapping, state: FiniteState) -> AbstractState:
    """The high-level view of one low-level state under the mapping."""
    preds = {name: eval_formula(state, {}, f) for name, f in m.preds.items()}
    fns = {name: eval_term(state, {}, c) for name, c in m.fns.items()}
    return AbstractState.make(preds, fns)


# ---------------------------------------------------------------------------
# Instances and bounded state enumeration


def instance_state(low: LowBAT, inst: Instance) -> tuple[FiniteDomain, FiniteState]:
    """The domain and state an instance block describes."""
    domain = domain_for(low, inst.objects)
    ext: dict[str, set[tuple[str, ...]]] = {name: set() for name in low.fluents}
    for pred, args in inst.atoms:
        if pred not in ext:
            raise SemanticsError(f"undeclared fluent {pred}")
        ext[pred].add(tuple(args))
    return domain, FiniteState(domain, ext)


def empty_state(low: LowBAT, domain: FiniteDomain) -> FiniteState:
    return FiniteState(domain, {name: set() for name in low.fluents})


def _eval_cost(f) -> int:
    """Rough evaluation-cost estimate: closures and nested binders weigh most."""
    if isinstance(f, (TC, Count)):
        return 100 + sum(_eval_cost(c) for c in _children(f))
    if isinstance(f, (Exists, Forall, Pick)):
        return 10 * max(1, sum(_eval_cost(c) for c in _children(f)))
    return 1 + sum(_eval_cost(c) for c in _children(f))


def _children(f):
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, Not):
        return (f.body,)
    if isinstance(f, (Exists, Forall)):
        return (f.body,)
    if isinstance(f, TC):
        return (f.body,)
    if isinstance(f, Count):
        return (f.body,)
    if isinstance(f, (Eq, Lt, CongMod, Add, Sub)):
        return (f.left, f.right)
    return ()


class _Found(Exception):
    pass


def enumerate_states(
    low: LowBAT,
    domain: FiniteDomain,
    formula: Formula,
    budget: int = 5_000_000,
    limit: int | None = None,
) -> list[FiniteState]:
    """All states over the domain satisfying a closed formula.

    Backtracks over ground atoms in declaration order, pruning with the
    three-valued evaluator (any branch whose partial evaluation is already
    false is dropped whole).  Deterministic: atoms are decided false before
    true, so sparser states come first.  Raises BudgetError when the search
    tree exceeds the node budget.

    limit stops the search after that many states; use limit=1 as a pure
    satisfiability probe.  The returned prefix is still deterministic.
    """
    if free_vars(formula):
        raise SemanticsError("state enumeration needs a closed formula")
    atoms = [
        (name, tup)
        for name, arity in low.fluents.items()
        for tup in product(domain.objects, repeat=arity)
    ]
    conjuncts = list(formula.args) if isinstance(formula, And) else [formula]
    conjuncts.sort(key=_eval_cost)  # stable: cheap prunes run before closures
    partial = _PartialState(domain, low.fluents)
    out: list[FiniteState] = []
    nodes = 0

    def spend() -> None:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetError(f"state enumeration exceeded {budget} nodes")

    def emit() -> None:
        ext: dict[str, set[tuple[str, ...]]] = {name: set() for name in low.fluents}
        for (name, tup), value in partial.assigned.items():
            if value:
                ext[name].add(tup)
        out.append(FiniteState(domain, ext))
        if limit is not None and len(out) >= limit:
            raise _Found()

    def expand_rest(i: int) -> None:
        spend()
        if i == len(atoms):
            emit()
            return
        for value in (False, True):
            partial.assigned[atoms[i]] = value
            expand_rest(i + 1)
        del partial.assigned[atoms[i]]

    def search(i: int, pending: list[Formula]) -> None:
        # Truth on partial states is monotone under extending the assignment,
        # so a conjunct decided here never needs re-evaluation below.
        spend()
        still: list[Formula] = []
        for c in pending:
            v = _f3(c, partial, {})
            if v is False:
                return
            if v is None:
                still.append(c)
        if not still:
            expand_rest(i)
            return
        if i == len(atoms):
            return
        for value in (False, True):
            partial.assigned[atoms[i]] = value
            search(i + 1, still)
        del partial.assigned[atoms[i]]

    try:
        search(0, conjuncts)
    except _Found:
        pass
    return out
