"""Bounded verification: action/formula interaction checks, classification,
and the mapping restrictions.

Every semantic check here is finitized: quantification over models becomes
enumeration over explicit finite domains between configurable size bounds,
and quantification over situations becomes enumeration of the states
reachable through executable ground actions from admissible initial states.
Universal claims are therefore refutation-complete but verification-
incomplete: a fail verdict carries a concrete replayable counterexample,
while a pass verdict means "no counterexample up to the bound".  Existential
claims (satisfiability) work the other way around: finding a state settles
them positively, exhausting the bounds leaves them unknown.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator

from .mapping import (
    FN_LABELS,
    PRED_LABELS,
    UNKNOWN_LABEL,
    GuardedAction,
    MappingError,
    RefinementMapping,
    inverse_translate,
    is_prop_exists,
    phi_set,
    strip_exists,
)
from .printer import unparse
from .report import FAIL, PASS, UNKNOWN, CertReport, Check, Counterexample
from .semantics import (
    AbstractState,
    BudgetError,
    FiniteDomain,
    FiniteState,
    abstract_state,
    enumerate_states,
    eval_formula,
    ground_actions,
    instance_state,
    poss,
    successor,
)
from .syntax import (
    Act,
    And,
    Bot,
    CongMod,
    Count,
    Eq,
    Exists,
    Forall,
    Formula,
    IntConst,
    Lt,
    Node,
    Not,
    ObjConst,
    Or,
    PredFluent,
    Sub,
    TC,
    Term,
    Top,
    Var,
    ast_key,
    conj,
    free_vars,
    normalize,
)
from .syntax import Add as AddTerm
from .theory import Instance, LowBAT

ENABLING, DISABLING, INVARIANT = PRED_LABELS
INCREMENTAL, DECREMENTAL, FN_INVARIANT = FN_LABELS


class VerifyError(ValueError):
    """Raised on ill-posed check requests (bad bounds, unclassifiable pairs)."""


# ---------------------------------------------------------------------------
# Bounds and state universes


@dataclass(frozen=True)
class DomainBounds:
    """How far the bounded checks look.

    Sizes count total objects, declared constants included.  The policy
    selects the admissible initial states per size: "init-kb" enumerates
    every state satisfying the initial theory and the constraints, "seeds"
    uses the given instances (grouped by their total size).  template_depth
    controls the projection-formula family; slack is the extra domain
    headroom granted to the constrained side of the projection comparison.
    """

    min_objects: int = 2
    max_objects: int = 5
    policy: str = "init-kb"
    seeds: tuple[Instance, ...] = ()
    template_depth: int = 2
    slack: int = 1
    budget: int = 5_000_000

    def __post_init__(self) -> None:
        if self.min_objects < 1 or self.max_objects < self.min_objects:
            raise VerifyError("bounds need 1 <= min_objects <= max_objects")
        if self.policy not in ("init-kb", "seeds"):
            raise VerifyError(f"unknown initial-state policy {self.policy!r}")
        if self.policy == "seeds" and not self.seeds:
            raise VerifyError("the seeds policy needs at least one instance")
        if self.template_depth < 1:
            raise VerifyError("template depth must be at least 1")
        if self.slack < 0:
            raise VerifyError("slack must be nonnegative")
        if self.budget < 1:
            raise VerifyError("budget must be positive")

    def sizes(self) -> range:
        return range(self.min_objects, self.max_objects + 1)


def _fresh_objects(taken: Iterable[str], count: int) -> tuple[str, ...]:
    taken = set(taken)
    out: list[str] = []
    i = 1
    while len(out) < count:
        name = f"o{i}"
        if name not in taken:
            out.append(name)
        i += 1
    return tuple(out)


def _domain_of_size(low: LowBAT, size: int) -> FiniteDomain:
    base = len(low.constants)
    if size < max(1, base):
        raise VerifyError(
            f"size {size} cannot hold the {base} declared constant(s)"
        )
    return FiniteDomain(tuple(low.constants) + _fresh_objects(low.constants, size - base))


Edge = tuple[str, tuple[str, ...], FiniteState]


@dataclass(frozen=True)
class SizeSlice:
    """One domain size's executable fragment: admissible initial states, the
    states reachable from them through executable ground actions (in
    breadth-first discovery order), and each state's outgoing edges."""

    size: int
    domain: FiniteDomain
    initials: tuple[FiniteState, ...]
    states: tuple[FiniteState, ...]
    edges: dict[FiniteState, tuple[Edge, ...]]


class StateUniverse:
    """Lazily built, cached per-size state spaces shared across checks.

    slice(n) holds the executable fragment; constrained(n) holds every
    state over n objects satisfying the state constraints (initial theory
    not required), used by checks that quantify over all legal states.
    """

    def __init__(self, low: LowBAT, bounds: DomainBounds):
        self.low = low
        self.bounds = bounds
        self._slices: dict[int, SizeSlice] = {}
        self._constrained: dict[int, tuple[FiniteState, ...]] = {}
        self._seeds_by_size: dict[int, list[Instance]] = {}
        if bounds.policy == "seeds":
            base = len(low.constants)
            for inst in bounds.seeds:
                total = base + len(inst.objects)
                if bounds.min_objects <= total <= bounds.max_objects:
                    self._seeds_by_size.setdefault(total, []).append(inst)
            if not self._seeds_by_size:
                raise VerifyError("no seed instance falls within the bounds")

    @property
    def sizes(self) -> tuple[int, ...]:
        if self.bounds.policy == "seeds":
            return tuple(sorted(self._seeds_by_size))
        return tuple(self.bounds.sizes())

    def domain(self, size: int) -> FiniteDomain:
        seeds = self._seeds_by_size.get(size)
        if seeds:
            return instance_state(self.low, seeds[0])[0]
        return _domain_of_size(self.low, size)

    def slice(self, size: int) -> SizeSlice:
        sl = self._slices.get(size)
        if sl is None:
            domain = self.domain(size)
            initials = self._initials(size, domain)
            states, edges = self._explore(domain, initials)
            sl = SizeSlice(size, domain, tuple(initials), states, edges)
            self._slices[size] = sl
        return sl

    def constrained(self, size: int) -> tuple[FiniteState, ...]:
        states = self._constrained.get(size)
        if states is None:
            states = tuple(
                enumerate_states(
                    self.low,
                    self.domain(size),
                    conj(list(self.low.constraints)),
                    budget=self.bounds.budget,
                )
            )
            self._constrained[size] = states
        return states

    def _initials(self, size: int, domain: FiniteDomain) -> list[FiniteState]:
        if self.bounds.policy == "seeds":
            out: list[FiniteState] = []
            for inst in self._seeds_by_size[size]:
                idom, state = instance_state(self.low, inst)
                if idom != domain:
                    raise VerifyError(
                        f"seed instances of size {size} disagree on object names"
                    )
                admissible = eval_formula(state, {}, self.low.init) and all(
                    eval_formula(state, {}, c) for c in self.low.constraints
                )
                if not admissible:
                    raise VerifyError(
                        f"seed instance {inst.name} violates the initial theory "
                        "or the state constraints"
                    )
                if state not in out:
                    out.append(state)
            return out
        target = conj([self.low.init, *self.low.constraints])
        return enumerate_states(self.low, domain, target, budget=self.bounds.budget)

    def _explore(self, domain, initials):
        seen: dict[FiniteState, FiniteState] = {}
        order: list[FiniteState] = []
        frontier: list[FiniteState] = []
        for s in initials:
            if s not in seen:
                seen[s] = s
                order.append(s)
                frontier.append(s)
        edges: dict[FiniteState, tuple[Edge, ...]] = {}
        while frontier:
            nxt: list[FiniteState] = []
            for s in frontier:
                out: list[Edge] = []
                for name, args in ground_actions(self.low, domain):
                    if not poss(self.low, s, name, args):
                        continue
                    succ = successor(self.low, s, name, args)
                    canon = seen.get(succ)
                    if canon is None:
                        seen[succ] = succ
                        order.append(succ)
                        nxt.append(succ)
                        canon = succ
                    out.append((name, args, canon))
                edges[s] = tuple(out)
            frontier = nxt
        return tuple(order), edges


def _resolve_universe(
    low: LowBAT, bounds: DomainBounds | None, universe: StateUniverse | None
) -> StateUniverse:
    if universe is not None:
        return universe
    if bounds is None:
        raise VerifyError("either bounds or a universe must be given")
    return StateUniverse(low, bounds)


# ---------------------------------------------------------------------------
# Occurrence enumeration shared by the action/formula checks


def _action_var_names(action: Act) -> tuple[str, ...]:
    names: list[str] = []
    for t in action.args:
        if isinstance(t, Var):
            if t.name not in names:
                names.append(t.name)
        elif not isinstance(t, ObjConst):
            raise VerifyError(
                f"occurrence arguments must be variables or constants, got {t!r}"
            )
    return tuple(names)


def _match_args(
    patterns: tuple[Term, ...], ground: tuple[str, ...]
) -> dict[str, str] | None:
    env: dict[str, str] = {}
    for t, g in zip(patterns, ground):
        if isinstance(t, ObjConst):
            if t.name != g:
                return None
        else:  # Var, validated upstream
            bound = env.get(t.name)
            if bound is None:
                env[t.name] = g
            elif bound != g:
                return None
    return env


def _require_vars(f: Formula, allowed: Iterable[str], what: str) -> None:
    extra = sorted({v.name for v in free_vars(f)} - set(allowed))
    if extra:
        raise VerifyError(
            f"{what} uses variables the occurrence does not bind: "
            + ", ".join(extra)
        )


def _occurrences(
    sl: SizeSlice,
    action: Act,
    psi: Formula,
    extra_vars: tuple[str, ...],
) -> Iterator[tuple[FiniteState, dict[str, str], tuple[str, ...], FiniteState]]:
    """Applicable occurrences in the slice: executable edges of the action
    whose arguments fit the pattern and whose guard holds, each completed
    with every assignment of the extra (picked but unmentioned) variables."""
    for s in sl.states:
        for name, args, succ in sl.edges[s]:
            if name != action.name:
                continue
            base = _match_args(action.args, args)
            if base is None:
                continue
            for tup in product(sl.domain.objects, repeat=len(extra_vars)):
                env = dict(base)
                env.update(zip(extra_vars, tup))
                if eval_formula(s, env, psi):
                    yield s, env, args, succ


def _count_occurrences(
    universe: StateUniverse, action: Act, psi: Formula, extra_vars: tuple[str, ...]
) -> int:
    n = 0
    for size in universe.sizes:
        for _ in _occurrences(universe.slice(size), action, psi, extra_vars):
            n += 1
    return n


# ---------------------------------------------------------------------------
# Action/formula interaction checks


def check_alt_enabling(
    low: LowBAT,
    action: Act,
    phi: Formula,
    psi: Formula = Top(),
    bounds: DomainBounds | None = None,
    universe: StateUniverse | None = None,
    extra_vars: tuple[str, ...] = (),
    name: str = "",
) -> Check:
    """The action flips the target formula from false to true, at the bound
    occurrence, whenever it is executable and the guard holds."""
    universe = _resolve_universe(low, bounds, universe)
    allowed = _action_var_names(action) + tuple(extra_vars)
    _require_vars(phi, allowed, "the target formula")
    _require_vars(psi, allowed, "the guard")
    name = name or f"alternately-enabling {action.name}"
    for size in universe.sizes:
        sl = universe.slice(size)
        for s, env, args, succ in _occurrences(sl, action, psi, extra_vars):
            if eval_formula(s, env, phi):
                return Check(
                    name,
                    FAIL,
                    size,
                    Counterexample(
                        size, s, action.name, args,
                        "the target formula already holds before the action",
                    ),
                )
            if not eval_formula(succ, env, phi):
                return Check(
                    name,
                    FAIL,
                    size,
                    Counterexample(
                        size, s, action.name, args,
                        "the target formula does not hold after the action",
                    ),
                )
    return Check(name, PASS, max(universe.sizes))


def check_single_enabling(
    low: LowBAT,
    action: Act,
    phi: Formula,
    psi: Formula = Top(),
    bounds: DomainBounds | None = None,
    universe: StateUniverse | None = None,
    extra_vars: tuple[str, ...] = (),
    name: str = "",
) -> Check:
    """Alternately enabling, plus a frame condition: the target formula's
    truth value is untouched at every other variable tuple."""
    universe = _resolve_universe(low, bounds, universe)
    allowed = _action_var_names(action) + tuple(extra_vars)
    _require_vars(phi, allowed, "the target formula")
    _require_vars(psi, allowed, "the guard")
    name = name or f"singly-enabling {action.name}"
    ys = sorted({v.name for v in free_vars(phi)})
    for size in universe.sizes:
        sl = universe.slice(size)
        for s, env, args, succ in _occurrences(sl, action, psi, extra_vars):
            if eval_formula(s, env, phi):
                return Check(
                    name, FAIL, size,
                    Counterexample(
                        size, s, action.name, args,
                        "the target formula already holds before the action",
                    ),
                )
            if not eval_formula(succ, env, phi):
                return Check(
                    name, FAIL, size,
                    Counterexample(
                        size, s, action.name, args,
                        "the target formula does not hold after the action",
                    ),
                )
            bound_tuple = tuple(env[y] for y in ys)
            for tup in product(sl.domain.objects, repeat=len(ys)):
                if tup == bound_tuple:
                    continue
                other = dict(zip(ys, tup))
                if eval_formula(s, other, phi) != eval_formula(succ, other, phi):
                    return Check(
                        name, FAIL, size,
                        Counterexample(
                            size, s, action.name, args,
                            "the target formula changed at another tuple "
                            f"({', '.join(tup)})",
                        ),
                    )
    return Check(name, PASS, max(universe.sizes))


def check_invariant(
    low: LowBAT,
    action: Act,
    phi: Formula,
    psi: Formula = Top(),
    bounds: DomainBounds | None = None,
    universe: StateUniverse | None = None,
    extra_vars: tuple[str, ...] = (),
    name: str = "",
) -> Check:
    """The action leaves the formula's whole extension unchanged whenever it
    is executable and the guard holds.

    The formula's free variables are rebound afresh over the domain; names
    they share with the occurrence's variables are deliberately shadowed.
    """
    universe = _resolve_universe(low, bounds, universe)
    allowed = _action_var_names(action) + tuple(extra_vars)
    _require_vars(psi, allowed, "the guard")
    name = name or f"invariant {action.name}"
    ys = sorted({v.name for v in free_vars(phi)})
    for size in universe.sizes:
        sl = universe.slice(size)
        for s, env, args, succ in _occurrences(sl, action, psi, extra_vars):
            for tup in product(sl.domain.objects, repeat=len(ys)):
                other = dict(zip(ys, tup))
                if eval_formula(s, other, phi) != eval_formula(succ, other, phi):
                    where = f" at tuple ({', '.join(tup)})" if ys else ""
                    return Check(
                        name, FAIL, size,
                        Counterexample(
                            size, s, action.name, args,
                            f"the formula's truth value changed{where}",
                        ),
                    )
    return Check(name, PASS, max(universe.sizes))


def check_exclusive(
    low: LowBAT,
    phi: Formula,
    bounds: DomainBounds | None = None,
    universe: StateUniverse | None = None,
    name: str = "",
) -> Check:
    """At most one variable tuple satisfies the formula in every state
    reachable through executable actions from an admissible initial state."""
    universe = _resolve_universe(low, bounds, universe)
    name = name or "exclusive"
    ys = sorted({v.name for v in free_vars(phi)})
    for size in universe.sizes:
        sl = universe.slice(size)
        for s in sl.states:
            first: tuple[str, ...] | None = None
            for tup in product(sl.domain.objects, repeat=len(ys)):
                if not eval_formula(s, dict(zip(ys, tup)), phi):
                    continue
                if first is None:
                    first = tup
                    continue
                return Check(
                    name, FAIL, size,
                    Counterexample(
                        size, s,
                        note="two tuples satisfy the formula: "
                        f"({', '.join(first)}) and ({', '.join(tup)})",
                    ),
                )
    return Check(name, PASS, max(universe.sizes))


# ---------------------------------------------------------------------------
# Classification


@dataclass(frozen=True)
class ClassEntry:
    """A verified or assumed interaction label for one (action, fluent) pair."""

    action: str
    fluent: str
    label: str
    provenance: str
    checks: tuple[Check, ...] = ()


def _guard_parts(
    m: RefinementMapping, alpha: str
) -> tuple[GuardedAction, Act, tuple[str, ...]]:
    g = m.guarded(alpha)
    action = Act(g.action, g.args)
    arg_vars = _action_var_names(action)
    extra = tuple(v.name for v in g.vars if v.name not in arg_vars)
    return g, action, extra


def classify(
    low: LowBAT,
    m: RefinementMapping,
    alpha: str,
    fluent: str,
    bounds: DomainBounds | None = None,
    universe: StateUniverse | None = None,
) -> ClassEntry:
    """Label how one high-level action treats one high-level fluent's
    defining formula: for predicate fluents Enabling, Disabling, or
    Invariant; for integer fluents Incremental, Decremental, or FnInvariant.

    Labels are tried in a fixed order and all passing ones are collected;
    more than one passing label means every applicable occurrence was
    vacuous (or the bounds are too small), which is reported as an error
    rather than an arbitrary pick.  A user assumption for the pair
    short-circuits verification and is marked in the provenance.
    """
    universe = _resolve_universe(low, bounds, universe)
    if fluent in m.preds:
        kind_labels = PRED_LABELS
        _, matrix = strip_exists(m.preds[fluent])
    elif fluent in m.fns:
        kind_labels = FN_LABELS
        c = m.fns[fluent]
        if not isinstance(c, Count):
            raise VerifyError(f"definition of {fluent} must be a counting term")
        matrix = c.body
    else:
        raise VerifyError(f"{fluent} is not defined by the mapping")

    assumed = m.assumed.get((alpha, fluent))
    if assumed is not None:
        if assumed not in kind_labels:
            raise VerifyError(
                f"assumed label {assumed} for ({alpha}, {fluent}) must be one "
                "of " + ", ".join(kind_labels)
            )
        return ClassEntry(alpha, fluent, assumed, "user-assumed")

    g, action, extra = _guard_parts(m, alpha)
    allowed = set(_action_var_names(action)) | set(extra)
    ynames = {v.name for v in free_vars(matrix)}
    subset = ynames <= allowed

    checks: list[Check] = []
    passing: list[str] = []

    def run(label: str, check: Check) -> None:
        checks.append(check)
        if check.verdict == PASS:
            passing.append(label)

    if subset:
        if kind_labels is PRED_LABELS:
            run(ENABLING, check_alt_enabling(
                low, action, matrix, g.guard, universe=universe,
                extra_vars=extra, name=f"{alpha}/{fluent} enabling"))
            dis = check_alt_enabling(
                low, action, Not(matrix), g.guard, universe=universe,
                extra_vars=extra, name=f"{alpha}/{fluent} disabling")
            checks.append(dis)
            if dis.verdict == PASS:
                excl = check_exclusive(
                    low, matrix, universe=universe,
                    name=f"{alpha}/{fluent} exclusivity")
                checks.append(excl)
                if excl.verdict == PASS:
                    passing.append(DISABLING)
        else:
            run(INCREMENTAL, check_single_enabling(
                low, action, matrix, g.guard, universe=universe,
                extra_vars=extra, name=f"{alpha}/{fluent} incremental"))
            run(DECREMENTAL, check_single_enabling(
                low, action, Not(matrix), g.guard, universe=universe,
                extra_vars=extra, name=f"{alpha}/{fluent} decremental"))
    inv_label = INVARIANT if kind_labels is PRED_LABELS else FN_INVARIANT
    run(inv_label, check_invariant(
        low, action, matrix, g.guard, universe=universe,
        extra_vars=extra, name=f"{alpha}/{fluent} invariant"))

    top = max(universe.sizes)
    if len(passing) > 1:
        napp = _count_occurrences(universe, action, g.guard, extra)
        why = (
            "the guard admits no applicable occurrence at these bounds"
            if napp == 0
            else f"only {napp} applicable occurrence(s) were examined"
        )
        raise VerifyError(
            f"classification of ({alpha}, {fluent}) is ambiguous: "
            + ", ".join(passing)
            + f" all hold up to size {top}; {why}"
        )
    if not passing and not subset:
        raise VerifyError(
            f"classification of ({alpha}, {fluent}): the definition's "
            f"variables ({', '.join(sorted(ynames))}) are not bound by the "
            f"occurrence ({', '.join(sorted(allowed))}), so only invariance "
            "was checkable, and it does not hold"
        )
    label = passing[0] if passing else UNKNOWN_LABEL
    return ClassEntry(
        alpha, fluent, label, f"verified-up-to-bound:{top}", tuple(checks)
    )


def classify_all(
    low: LowBAT,
    m: RefinementMapping,
    bounds: DomainBounds | None = None,
    universe: StateUniverse | None = None,
) -> dict[tuple[str, str], ClassEntry]:
    """Classification entries for every (action, fluent) pair of the mapping."""
    universe = _resolve_universe(low, bounds, universe)
    out: dict[tuple[str, str], ClassEntry] = {}
    for alpha in sorted(m.actions):
        for fluent in [*m.preds, *m.fns]:
            out[(alpha, fluent)] = classify(low, m, alpha, fluent, universe=universe)
    return out


# ---------------------------------------------------------------------------
# Projection oracle


def forget_project(
    low: LowBAT,
    m: RefinementMapping,
    constraint: Formula,
    phi: Formula,
    n: int,
    budget: int = 5_000_000,
    domain: FiniteDomain | None = None,
) -> frozenset[AbstractState]:
    """The abstract images of every state over n objects satisfying
    constraint ∧ phi.

    Computed without materializing the state space: for each candidate
    abstract state (all truth assignments times all integer values the
    counting terms can take at this size), one bounded satisfiability probe
    decides whether some state realizes it while satisfying the input
    formulas.  The result equals the image set of a full enumeration.
    """
    if domain is None:
        domain = _domain_of_size(low, n)
    elif len(domain.objects) != n:
        raise VerifyError(f"domain has {len(domain.objects)} objects, expected {n}")
    preds = list(m.preds)
    fns = list(m.fns)
    ranges = []
    for name in fns:
        c = m.fns[name]
        if not isinstance(c, Count):
            raise VerifyError(f"definition of {name} must be a counting term")
        ranges.append(range(0, n ** len(c.vars) + 1))
    out: set[AbstractState] = set()
    for pvals in product((False, True), repeat=len(preds)):
        fixed: list[Formula] = [constraint, phi]
        for name, value in zip(preds, pvals):
            d = m.preds[name]
            fixed.append(d if value else Not(d))
        for fvals in product(*ranges):
            parts = fixed + [
                Eq(m.fns[name], IntConst(v)) for name, v in zip(fns, fvals)
            ]
            if enumerate_states(low, domain, conj(parts), budget=budget, limit=1):
                out.add(
                    AbstractState.make(dict(zip(preds, pvals)), dict(zip(fns, fvals)))
                )
    return frozenset(out)


# ---------------------------------------------------------------------------
# Projection-formula families


def exists_atoms(m: RefinementMapping) -> tuple[Formula, ...]:
    """The closed designated formulas, deduplicated, in declaration order."""
    return tuple(e.closure for e in phi_set(m))


def template_formulas(atoms: tuple[Formula, ...], depth: int) -> tuple[Formula, ...]:
    """Every Boolean combination of the atoms (plus ⊤ and ⊥) up to the given
    connective-nesting depth, deduplicated by normalized shape, in a fixed
    generation order."""
    seen: set = set()
    out: list[Formula] = []

    def add(f: Formula) -> None:
        key = ast_key(normalize(f))
        if key not in seen:
            seen.add(key)
            out.append(f)

    add(Top())
    add(Bot())
    for a in atoms:
        add(a)
    for _ in range(depth):
        base = list(out)
        for f in base:
            add(Not(f))
        for f in base:
            for g in base:
                add(And((f, g)))
                add(Or((f, g)))
    return tuple(out)


def random_formula(atoms: tuple[Formula, ...], depth: int, rng) -> Formula:
    """One random Boolean combination of the atoms within the depth budget.

    Deterministic for a seeded random.Random instance.
    """
    if depth <= 0 or rng.random() < 0.15:
        r = rng.randrange(len(atoms) + 2)
        if r == len(atoms):
            return Top()
        if r == len(atoms) + 1:
            return Bot()
        return atoms[r]
    op = rng.choice(("not", "and", "or"))
    if op == "not":
        return Not(random_formula(atoms, depth - 1, rng))
    left = random_formula(atoms, depth - 1, rng)
    right = random_formula(atoms, depth - 1, rng)
    return And((left, right)) if op == "and" else Or((left, right))


# ---------------------------------------------------------------------------
# Pred-fluent mention walker (for definition disjointness)


def mentioned_fluents(node: Node) -> frozenset[str]:
    """Names of all predicate fluents a formula or term mentions, at any depth."""
    out: set[str] = set()
    _mentions(node, out)
    return frozenset(out)


def _mentions(node: Node, out: set[str]) -> None:
    if isinstance(node, PredFluent):
        out.add(node.name)
        for a in node.args:
            _mentions(a, out)
    elif isinstance(node, (AddTerm, Sub, Eq, Lt, CongMod)):
        _mentions(node.left, out)
        _mentions(node.right, out)
    elif isinstance(node, (Not, Exists, Forall, Count)):
        _mentions(node.body, out)
    elif isinstance(node, (And, Or)):
        for a in node.args:
            _mentions(a, out)
    elif isinstance(node, TC):
        _mentions(node.body, out)
        for t in node.src + node.dst:
            _mentions(t, out)


# ---------------------------------------------------------------------------
# Restriction report


@dataclass
class RestrictionResult:
    """The seven mapping-restriction verdicts plus the classification table."""

    report: CertReport
    classifications: dict[tuple[str, str], ClassEntry]

    @property
    def verdict(self) -> str:
        return self.report.verdict


def check_restrictions(
    low: LowBAT, m: RefinementMapping, bounds: DomainBounds
) -> RestrictionResult:
    """Run the seven mapping restrictions, in fixed order, sharing one
    state universe.  Universal restrictions fail with counterexamples and
    otherwise pass up to the bound; satisfiability and witness-dependent
    ones degrade to unknown when the bounds or inputs cannot settle them.
    """
    universe = StateUniverse(low, bounds)
    title = f"restriction checks: mapping {m.name or '(unnamed)'} over {low.name}"
    report = CertReport(title)
    top = max(universe.sizes)

    flat = _check_flat(m)
    report.add(flat)
    if flat.verdict == FAIL:
        # The remaining checks evaluate the fluent definitions over states,
        # which is ill-posed while definitions are open or ill-shaped; skip
        # them instead of cascading errors.
        skipped = "skipped: the mapping is not flat"
        for name in (
            "complete", "consistent", "syntax-irrelevant",
            "simply-forgettable", "prop-exists-definable",
            "executability-preserving",
        ):
            report.add(Check(name, UNKNOWN, 0, detail=skipped))
        return RestrictionResult(report, {})
    classifications, complete = _check_complete(low, m, universe, top)
    report.add(complete)
    report.add(_check_consistent(low, m, universe, bounds))
    report.add(_check_syntax_irrelevant(m))
    report.add(_check_simply_forgettable(low, m, universe, bounds))
    report.add(_check_definable(low, m, universe, bounds))
    report.add(_check_exec_preserving(low, m, universe, report))
    return RestrictionResult(report, classifications)


def _check_flat(m: RefinementMapping) -> Check:
    problems: list[str] = []
    for alpha in sorted(m.actions):
        try:
            m.guarded(alpha)
        except MappingError as exc:
            problems.append(f"{alpha}: {exc}")
    for name, f in m.preds.items():
        if free_vars(f):
            problems.append(f"{name}: definition is not closed")
    for name, c in m.fns.items():
        if not isinstance(c, Count):
            problems.append(f"{name}: definition must be a counting term")
        elif free_vars(c):
            problems.append(f"{name}: definition is not closed")
    if problems:
        return Check("flat", FAIL, 0, detail="; ".join(problems))
    return Check(
        "flat", PASS, 0,
        detail=f"{len(m.actions)} guarded actions, "
        f"{len(m.preds) + len(m.fns)} closed fluent definitions",
    )


def _check_complete(
    low: LowBAT, m: RefinementMapping, universe: StateUniverse, top: int
) -> tuple[dict[tuple[str, str], ClassEntry], Check]:
    classifications: dict[tuple[str, str], ClassEntry] = {}
    issues: list[str] = []
    for alpha in sorted(m.actions):
        for fluent in [*m.preds, *m.fns]:
            try:
                entry = classify(low, m, alpha, fluent, universe=universe)
            except (VerifyError, MappingError) as exc:
                entry = ClassEntry(alpha, fluent, UNKNOWN_LABEL, f"error: {exc}")
                issues.append(str(exc))
            classifications[(alpha, fluent)] = entry
    unknown = sorted(
        k for k, e in classifications.items() if e.label == UNKNOWN_LABEL
    )
    if unknown or issues:
        named = ", ".join(f"({a}, {f})" for a, f in unknown)
        detail = f"unclassified pairs: {named}" if named else ""
        if issues:
            detail = "; ".join(filter(None, [detail, *issues]))
        return classifications, Check("complete", UNKNOWN, top, detail=detail)
    table = ", ".join(
        f"({a}, {f})={e.label}" for (a, f), e in sorted(classifications.items())
    )
    return classifications, Check("complete", PASS, top, detail=table)


def _check_consistent(
    low: LowBAT, m: RefinementMapping, universe: StateUniverse, bounds: DomainBounds
) -> Check:
    try:
        entries = phi_set(m)
    except MappingError as exc:
        return Check("consistent", UNKNOWN, 0, detail=str(exc))
    floor = max(1, len(low.constants))
    found_bound = 0
    unresolved: list[str] = []
    for e in entries:
        target = e.closure
        hit: int | None = None
        for size in range(floor, bounds.max_objects + 1):
            try:
                sat = enumerate_states(
                    low, universe.domain(size), target,
                    budget=bounds.budget, limit=1,
                )
            except BudgetError:
                unresolved.append(f"{unparse(target)} (budget exhausted)")
                break
            if sat:
                hit = size
                break
        else:
            unresolved.append(unparse(target))
        if hit is not None:
            found_bound = max(found_bound, hit)
    if unresolved:
        return Check(
            "consistent", UNKNOWN, bounds.max_objects,
            detail="no satisfying state found for: " + "; ".join(unresolved),
        )
    return Check(
        "consistent", PASS, found_bound,
        detail=f"all {len(entries)} designated formulas satisfiable",
    )


def _check_syntax_irrelevant(m: RefinementMapping) -> Check:
    try:
        entries = phi_set(m)
    except MappingError as exc:
        return Check("syntax-irrelevant", UNKNOWN, 0, detail=str(exc))
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            shared = mentioned_fluents(entries[i].body) & mentioned_fluents(
                entries[j].body
            )
            if shared:
                a = "/".join(entries[i].sources)
                b = "/".join(entries[j].sources)
                return Check(
                    "syntax-irrelevant", FAIL, 0,
                    detail=f"definitions of {a} and {b} share low-level "
                    "fluent(s): " + ", ".join(sorted(shared)),
                )
    return Check(
        "syntax-irrelevant", PASS, 0,
        detail=f"{len(entries)} designated bodies pairwise disjoint",
    )


def _check_simply_forgettable(
    low: LowBAT, m: RefinementMapping, universe: StateUniverse, bounds: DomainBounds
) -> Check:
    """Projection comparison: everything the unconstrained projection reaches
    (small sizes) must be reachable by the constraint-respecting projection
    (with slack extra objects), for every formula in the template family.

    A state set's projection image under any Boolean combination of the
    designated formulas is the image of the full set filtered by the
    combination's high-level translation (each designated formula's truth at
    a state is, by definition, its high-level value at the state's image).
    The subset comparison therefore runs once on the unfiltered images and
    failures are attributed to the first template that exhibits them.
    """
    try:
        atoms = exists_atoms(m)
    except MappingError as exc:
        return Check("simply-forgettable", UNKNOWN, 0, detail=str(exc))
    templates = template_formulas(atoms, bounds.template_depth)
    floor = max(1, len(low.constants))
    top = bounds.max_objects
    constrained_images: set[AbstractState] = set()
    unconstrained_images: set[AbstractState] = set()
    try:
        for size in range(floor, top + 1):
            for s in universe.constrained(size):
                constrained_images.add(abstract_state(m, s))
            if size <= top - bounds.slack:
                unconstrained_images |= forget_project(
                    low, m, Top(), Top(), size,
                    budget=bounds.budget, domain=universe.domain(size),
                )
    except BudgetError as exc:
        return Check("simply-forgettable", UNKNOWN, top, detail=str(exc))
    stray = sorted(unconstrained_images - constrained_images)
    if stray:
        for t in templates:
            high = inverse_translate(m, t)
            bad = [a for a in stray if eval_formula(a, {}, high)]
            if bad:
                return Check(
                    "simply-forgettable", FAIL, top,
                    Counterexample(
                        top, bad[0],
                        note=f"projection of {unparse(t)} without constraints "
                        f"reaches this image at {top - bounds.slack} or fewer "
                        f"objects, but no constraint-satisfying state "
                        f"realizes it with up to {top} objects",
                    ),
                )
    return Check(
        "simply-forgettable", PASS, top,
        detail=f"{len(templates)} projection formulas at depth "
        f"{bounds.template_depth}, slack {bounds.slack}",
    )


def _definability_targets(
    low: LowBAT, m: RefinementMapping
) -> list[tuple[str, Formula]]:
    targets: list[tuple[str, Formula]] = [("init", low.init)]
    for alpha in sorted(m.actions):
        g = m.guarded(alpha)
        body = conj([g.guard, low.precondition(g.action, g.args)])
        f: Formula = body
        for v in reversed(g.vars):
            f = Exists(v, f)
        targets.append((alpha, f))
    return targets


def _check_definable(
    low: LowBAT, m: RefinementMapping, universe: StateUniverse, bounds: DomainBounds
) -> Check:
    try:
        targets = _definability_targets(low, m)
    except MappingError as exc:
        return Check("prop-exists-definable", UNKNOWN, 0, detail=str(exc))
    missing = [key for key, _ in targets if key not in m.witnesses]
    if missing:
        return Check(
            "prop-exists-definable", UNKNOWN, 0,
            detail="no witness for: " + ", ".join(missing),
        )
    malformed = [
        key for key, _ in targets if not is_prop_exists(m, m.witnesses[key])
    ]
    if malformed:
        return Check(
            "prop-exists-definable", UNKNOWN, 0,
            detail="witness is not a Boolean combination of the designated "
            "formulas: " + ", ".join(malformed),
        )
    top = bounds.max_objects
    for size in bounds.sizes():
        for s in universe.constrained(size):
            for key, target in targets:
                wv = eval_formula(s, {}, m.witnesses[key])
                tv = eval_formula(s, {}, target)
                if wv != tv:
                    what = "initial theory" if key == "init" else f"executability of {key}"
                    return Check(
                        "prop-exists-definable", FAIL, size,
                        Counterexample(
                            size, s,
                            note=f"witness for {key} is {str(wv).lower()} but "
                            f"the {what} is {str(tv).lower()}",
                        ),
                    )
    return Check(
        "prop-exists-definable", PASS, top,
        detail=f"{len(targets)} witnesses equivalent on all "
        "constraint-satisfying states",
    )


def _check_exec_preserving(
    low: LowBAT,
    m: RefinementMapping,
    universe: StateUniverse,
    report: CertReport,
) -> Check:
    prereq_names = ("flat", "consistent", "syntax-irrelevant", "prop-exists-definable")
    verdicts = {c.name: c.verdict for c in report.checks}
    guards: dict[str, tuple[Act, Formula, tuple[str, ...]]] = {}
    for alpha in sorted(m.actions):
        try:
            g, action, extra = _guard_parts(m, alpha)
        except (MappingError, VerifyError):
            continue
        guards[alpha] = (action, g.guard, extra)

    def executable(sl: SizeSlice, s: FiniteState, alpha: str) -> bool:
        action, guard, extra = guards[alpha]
        for name, args, _succ in sl.edges[s]:
            if name != action.name:
                continue
            base = _match_args(action.args, args)
            if base is None:
                continue
            for tup in product(sl.domain.objects, repeat=len(extra)):
                env = dict(base)
                env.update(zip(extra, tup))
                if eval_formula(s, env, guard):
                    return True
        return False

    for size in universe.sizes:
        sl = universe.slice(size)
        groups: dict[AbstractState, list[FiniteState]] = {}
        for s in sl.states:
            groups.setdefault(abstract_state(m, s), []).append(s)
        for image, members in groups.items():
            if len(members) < 2:
                continue
            head = members[0]
            head_exec = {a: executable(sl, head, a) for a in guards}
            for other in members[1:]:
                for alpha in guards:
                    if executable(sl, other, alpha) != head_exec[alpha]:
                        return Check(
                            "executability-preserving", FAIL, size,
                            Counterexample(
                                size, (head, other), alpha,
                                note="states with the same abstract image "
                                f"{image!r} disagree on the refinement's "
                                "executability",
                            ),
                        )
    top = max(universe.sizes)
    if all(verdicts.get(n) == PASS for n in prereq_names):
        return Check(
            "executability-preserving", PASS, top,
            detail="implied by flat + consistent + syntax-irrelevant + "
            "definable; abstract-image grouping agreed on all reachable "
            "states",
        )
    unmet = [n for n in prereq_names if verdicts.get(n) != PASS]
    return Check(
        "executability-preserving", UNKNOWN, top,
        detail="not established: " + ", ".join(unmet)
        + "; the direct abstract-image spot-check found no violation",
    )
