"""Action theory containers: relational base theories and integer-counter theories.

A low-level theory describes a relational domain: object constants, predicate
fluents with object parameters, parameterized actions with precondition
formulas, successor-state axioms in add/del clause form, an initial-state
sentence, and state constraints.

A high-level theory is the integer-counter form: every predicate fluent is
propositional (0-ary), every functional fluent is integer-valued and 0-ary,
every action is parameterless, and every formula is quantifier-free linear
integer arithmetic over those fluents.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    Eq,
    Exists,
    Formula,
    Term,
    Top,
    Var,
    conj,
    disj,
    free_vars,
    is_lia_definable,
    is_lia_term,
    normalize,
    substitute,
)


class TheoryError(ValueError):
    """Raised when a theory fails structural validation."""


@dataclass(frozen=True)
class EffectClause:
    """One add or del clause of a predicate-fluent successor-state axiom.

    The clause fires for occurrences of ``action`` whose arguments unify with
    ``args`` while ``condition`` holds in the predecessor state.  Variables in
    ``args`` or ``condition`` that are not parameters of the owning fluent are
    implicitly existentially quantified.
    """

    polarity: str  # "add" or "del"
    action: str
    args: tuple[Term, ...] = ()
    condition: Formula = Top()


@dataclass(frozen=True)
class SetClause:
    """One assignment clause of an integer-fluent successor-state axiom.

    When ``action`` occurs and ``condition`` holds, the fluent's next value is
    ``value`` evaluated in the predecessor state.
    """

    action: str
    value: Term
    condition: Formula = Top()


@dataclass(frozen=True)
class PredSSA:
    """Successor-state axiom for a predicate fluent, in add/del clause form."""

    fluent: str
    params: tuple[Var, ...]
    clauses: tuple[EffectClause, ...] = ()


@dataclass(frozen=True)
class FnSSA:
    """Successor-state axiom for an integer fluent, in set-clause form.

    Actions without a set clause leave the fluent unchanged.
    """

    fluent: str
    clauses: tuple[SetClause, ...] = ()


@dataclass(frozen=True)
class ActionDecl:
    """An action symbol with its parameters and precondition formula."""

    name: str
    params: tuple[Var, ...] = ()
    precond: Formula = Top()


def _instantiate(decl: ActionDecl, args: tuple[Term, ...]) -> Formula:
    if len(args) != len(decl.params):
        raise TheoryError(
            f"action {decl.name} expects {len(decl.params)} argument(s), got {len(args)}"
        )
    return substitute(decl.precond, {v.name: a for v, a in zip(decl.params, args)})


@dataclass
class LowBAT:
    """A relational basic action theory."""

    name: str
    constants: tuple[str, ...] = ()
    fluents: dict[str, int] = field(default_factory=dict)
    actions: dict[str, ActionDecl] = field(default_factory=dict)
    ssas: dict[str, PredSSA] = field(default_factory=dict)
    init: Formula = Top()
    constraints: tuple[Formula, ...] = ()

    def precondition(self, action: str, args: tuple[Term, ...] = ()) -> Formula:
        """The precondition of an action occurrence, parameters substituted."""
        if action not in self.actions:
            raise TheoryError(f"unknown action {action}")
        return _instantiate(self.actions[action], args)

    def validate(self) -> list[str]:
        """Structural problems, empty when the theory is well formed."""
        problems: list[str] = []
        for name, decl in self.actions.items():
            extra = free_vars(decl.precond) - set(decl.params)
            if extra:
                names = ", ".join(sorted(v.name for v in extra))
                problems.append(f"precondition of {name} has free variables: {names}")
        for fluent, arity in self.fluents.items():
            ssa = self.ssas.get(fluent)
            if ssa is None:
                problems.append(f"fluent {fluent} has no successor-state axiom")
                continue
            if len(ssa.params) != arity:
                problems.append(
                    f"successor-state axiom for {fluent} has {len(ssa.params)} "
                    f"parameter(s), fluent has arity {arity}"
                )
            for clause in ssa.clauses:
                decl = self.actions.get(clause.action)
                if decl is None:
                    problems.append(
                        f"ssa for {fluent} mentions unknown action {clause.action}"
                    )
                    continue
                if len(clause.args) != len(decl.params):
                    problems.append(
                        f"ssa clause for {fluent}: {clause.action} expects "
                        f"{len(decl.params)} argument(s), got {len(clause.args)}"
                    )
        for name, ssa in self.ssas.items():
            if name not in self.fluents:
                problems.append(f"successor-state axiom for undeclared fluent {name}")
        if free_vars(self.init):
            problems.append("initial-state sentence is not closed")
        for c in self.constraints:
            if free_vars(c):
                problems.append("state constraint is not closed")
        return problems

    def check(self) -> None:
        problems = self.validate()
        if problems:
            raise TheoryError("; ".join(problems))

    def effect_condition(
        self, fluent: str, action: str, args: tuple[Term, ...]
    ) -> tuple[Formula, Formula]:
        """The instantiated add and del conditions of ``fluent`` for one action
        occurrence.

        Both formulas have the fluent's own parameters free.  Clause argument
        patterns are unified with the occurrence arguments under unique names:
        distinct constants never match, pattern variables bind, and leftover
        pattern variables stay existentially quantified.
        """
        ssa = self.ssas.get(fluent)
        if ssa is None:
            raise TheoryError(f"fluent {fluent} has no successor-state axiom")
        pos: list[Formula] = []
        neg: list[Formula] = []
        for clause in ssa.clauses:
            if clause.action != action:
                continue
            fired = _unify_clause(ssa.params, clause, args)
            if fired is None:
                continue
            (pos if clause.polarity == "add" else neg).append(fired)
        return normalize(disj(pos)), normalize(disj(neg))


def _unify_clause(
    params: tuple[Var, ...], clause: EffectClause, actual: tuple[Term, ...]
) -> Formula | None:
    """Match clause argument patterns against occurrence arguments.

    Returns the clause condition with pattern bindings applied, equations for
    the parts that cannot be solved syntactically, and existential quantifiers
    for unmatched extra variables.  Returns None when unique names refute the
    match outright.
    """
    param_names = {v.name for v in params}
    mentioned: set[Var] = set(free_vars(clause.condition))
    for arg in clause.args:
        mentioned |= free_vars(arg)
    extras = {v.name for v in mentioned if v.name not in param_names}
    binding: dict[str, Term] = {}
    equations: list[Formula] = []
    for pattern, value in zip(clause.args, actual):
        left = substitute(pattern, binding)
        if isinstance(left, Var) and left.name in extras and left.name not in binding:
            binding[left.name] = value
            continue
        if left == value:
            continue
        if _distinct_rigid(left, value):
            return None
        equations.append(Eq(left, value))
    body = conj([*equations, substitute(clause.condition, binding)])
    leftover = sorted(
        (v for v in free_vars(body) if v.name in extras and v.name not in binding),
        key=lambda v: v.name,
    )
    for v in reversed(leftover):
        body = Exists(v, body)
    return body


def _distinct_rigid(a: Term, b: Term) -> bool:
    from .syntax import IntConst, ObjConst

    if isinstance(a, ObjConst) and isinstance(b, ObjConst):
        return a.name != b.name
    if isinstance(a, IntConst) and isinstance(b, IntConst):
        return a.value != b.value
    return False


@dataclass
class HighLIBAT:
    """An integer-counter basic action theory."""

    name: str
    preds: tuple[str, ...] = ()
    fns: tuple[str, ...] = ()
    actions: dict[str, ActionDecl] = field(default_factory=dict)
    pred_ssas: dict[str, PredSSA] = field(default_factory=dict)
    fn_ssas: dict[str, FnSSA] = field(default_factory=dict)
    init: Formula = Top()

    def precondition(self, action: str) -> Formula:
        if action not in self.actions:
            raise TheoryError(f"unknown action {action}")
        return self.actions[action].precond

    def _lia_ok(self, f: Formula) -> bool:
        return is_lia_definable(f, preds=set(self.preds), fns=set(self.fns))

    def validate(self) -> list[str]:
        problems: list[str] = []
        for name, decl in self.actions.items():
            if decl.params:
                problems.append(f"action {name} must be parameterless")
            if not self._lia_ok(decl.precond):
                problems.append(
                    f"precondition of {name} is not quantifier-free linear arithmetic"
                )
        for name in self.preds:
            ssa = self.pred_ssas.get(name)
            if ssa is None:
                problems.append(f"fluent {name} has no successor-state axiom")
                continue
            if ssa.params:
                problems.append(f"fluent {name} must be propositional")
            for clause in ssa.clauses:
                if clause.action not in self.actions:
                    problems.append(
                        f"ssa for {name} mentions unknown action {clause.action}"
                    )
                if clause.args:
                    problems.append(f"ssa clause for {name} must be parameterless")
                if not self._lia_ok(clause.condition):
                    problems.append(f"ssa clause condition for {name} is not linear")
        for name in self.fns:
            ssa = self.fn_ssas.get(name)
            if ssa is None:
                problems.append(f"fluent {name} has no successor-state axiom")
                continue
            for clause in ssa.clauses:
                if clause.action not in self.actions:
                    problems.append(
                        f"ssa for {name} mentions unknown action {clause.action}"
                    )
                if not is_lia_term(clause.value, fns=set(self.fns)):
                    problems.append(f"ssa value for {name} is not a linear term")
                if not self._lia_ok(clause.condition):
                    problems.append(f"ssa clause condition for {name} is not linear")
        for name in list(self.pred_ssas) + list(self.fn_ssas):
            if name not in self.preds and name not in self.fns:
                problems.append(f"successor-state axiom for undeclared fluent {name}")
        if not self._lia_ok(self.init):
            problems.append("initial-state sentence is not quantifier-free linear arithmetic")
        return problems

    def check(self) -> None:
        problems = self.validate()
        if problems:
            raise TheoryError("; ".join(problems))


@dataclass(frozen=True)
class Instance:
    """A seed initial state: extra objects plus the ground atoms that hold."""

    name: str
    objects: tuple[str, ...] = ()
    atoms: tuple[tuple[str, tuple[str, ...]], ...] = ()
