"""Refinement mappings from integer-counter theories to relational theories.

A mapping sends each propositional fluent to a closed relational formula, each
integer fluent to a counting term, and each high-level action to a closed
program over low-level actions.  Action programs are restricted to the guarded
shape ``pi x1, ..., xk. guard?; act(t1, ..., tn)``: any prefix of picks, an
optional test, and a single action.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import syntax
from .syntax import (
    Act,
    And,
    Bot,
    Count,
    Exists,
    FluentFn,
    Formula,
    IntConst,
    Lt,
    Node,
    Not,
    Or,
    Pick,
    PredFluent,
    Program,
    Seq,
    Term,
    Test,
    Top,
    Var,
    alpha_equal,
    conj,
    free_vars,
    implies,
    normalize,
)


class MappingError(ValueError):
    """Raised when a mapping is malformed or a translation is impossible."""


# Behaviour labels an action can earn against a predicate fluent's defining
# formula (first three) or an integer fluent's counting body (last three).
PRED_LABELS = ("Enabling", "Disabling", "Invariant")
FN_LABELS = ("Incremental", "Decremental", "FnInvariant")
UNKNOWN_LABEL = "Unknown"


@dataclass(frozen=True)
class GuardedAction:
    """The flattened form of a mapped action program."""

    vars: tuple[Var, ...]
    guard: Formula
    action: str
    args: tuple[Term, ...]


def as_guarded(program: Program) -> GuardedAction:
    """Flatten a program of shape pi xs. (guard?;)? act(args) or fail."""
    picked: list[Var] = []
    body = program
    while isinstance(body, Pick):
        picked.append(body.var)
        body = body.body
    if isinstance(body, Act):
        return GuardedAction(tuple(picked), Top(), body.name, body.args)
    if (
        isinstance(body, Seq)
        and isinstance(body.first, Test)
        and isinstance(body.second, Act)
    ):
        return GuardedAction(
            tuple(picked), body.first.cond, body.second.name, body.second.args
        )
    raise MappingError(
        "mapped action program must be a pick prefix over an optionally "
        "guarded single action"
    )


@dataclass
class RefinementMapping:
    """Definitions for every high-level fluent and action symbol.

    assumed holds user-asserted classification labels keyed by
    (action, fluent); verifiers take them on trust and mark the provenance.
    """

    name: str = ""
    preds: dict[str, Formula] = field(default_factory=dict)
    fns: dict[str, Count] = field(default_factory=dict)
    actions: dict[str, Program] = field(default_factory=dict)
    witnesses: dict[str, Formula] = field(default_factory=dict)
    assumed: dict[tuple[str, str], str] = field(default_factory=dict)

    def guarded(self, action: str) -> GuardedAction:
        if action not in self.actions:
            raise MappingError(f"no mapping for action {action}")
        return as_guarded(self.actions[action])

    def validate(self, low=None, high=None) -> list[str]:
        """Structural problems, empty when the mapping is well formed."""
        problems: list[str] = []
        for name, f in self.preds.items():
            if free_vars(f):
                problems.append(f"definition of {name} is not closed")
        for name, c in self.fns.items():
            if not isinstance(c, Count):
                problems.append(f"definition of {name} must be a counting term")
            elif free_vars(c):
                problems.append(f"definition of {name} is not closed")
        for name, p in self.actions.items():
            try:
                g = as_guarded(p)
            except MappingError as exc:
                problems.append(f"definition of {name}: {exc}")
                continue
            picked = {v.name for v in g.vars}
            loose = {
                v.name
                for arg in g.args
                for v in free_vars(arg)
                if v.name not in picked
            } | {v.name for v in free_vars(g.guard) if v.name not in picked}
            if loose:
                problems.append(
                    f"definition of {name} has unbound variables: "
                    + ", ".join(sorted(loose))
                )
        try:
            atoms = designated_atoms(self)
        except (MappingError, AttributeError):
            atoms = None  # malformed fluent map, reported above
        for key, f in self.witnesses.items():
            if key != "init" and key not in self.actions:
                problems.append(f"witness for unknown target {key}")
            if free_vars(f):
                problems.append(f"witness for {key} is not closed")
            elif atoms is not None and _inverse(f, atoms) is None:
                problems.append(
                    f"witness for {key} is not a Boolean combination of the "
                    "designated formulas"
                )
        for (act, fl), label in self.assumed.items():
            if act not in self.actions:
                problems.append(f"assumption for unknown action {act}")
            if fl in self.preds:
                allowed = PRED_LABELS
            elif fl in self.fns:
                allowed = FN_LABELS
            else:
                problems.append(f"assumption for unknown fluent {fl}")
                continue
            if label not in allowed:
                problems.append(
                    f"assumed label {label} for ({act}, {fl}) must be one of "
                    + ", ".join(allowed)
                )
        if high is not None:
            for name in high.preds:
                if name not in self.preds:
                    problems.append(f"no definition for fluent {name}")
            for name in high.fns:
                if name not in self.fns:
                    problems.append(f"no definition for fluent {name}")
            for name in high.actions:
                if name not in self.actions:
                    problems.append(f"no definition for action {name}")
            for name in list(self.preds) + list(self.fns):
                if name not in tuple(high.preds) + tuple(high.fns):
                    problems.append(f"definition for undeclared fluent {name}")
            for name in self.actions:
                if name not in high.actions:
                    problems.append(f"definition for undeclared action {name}")
        if low is not None:
            for name, p in self.actions.items():
                try:
                    g = as_guarded(p)
                except MappingError:
                    continue
                decl = low.actions.get(g.action)
                if decl is None:
                    problems.append(
                        f"definition of {name} uses unknown action {g.action}"
                    )
                elif len(g.args) != len(decl.params):
                    problems.append(
                        f"definition of {name}: {g.action} expects "
                        f"{len(decl.params)} argument(s), got {len(g.args)}"
                    )
        return problems

    def check(self, low=None, high=None) -> None:
        problems = self.validate(low, high)
        if problems:
            raise MappingError("; ".join(problems))


def apply_mapping(m: RefinementMapping, node: Node) -> Node:
    """Translate a high-level formula or term into the low-level language.

    Propositional atoms become their defining formulas and integer fluents
    become their counting terms; arithmetic and Boolean structure is kept.
    """
    if isinstance(node, PredFluent):
        if node.args:
            raise MappingError(f"cannot translate non-propositional atom {node.name}")
        if node.name not in m.preds:
            raise MappingError(f"no definition for fluent {node.name}")
        return m.preds[node.name]
    if isinstance(node, FluentFn):
        if node.name not in m.fns:
            raise MappingError(f"no definition for fluent {node.name}")
        return m.fns[node.name]
    if isinstance(node, IntConst):
        return node
    if isinstance(node, (syntax.Add, syntax.Sub)):
        return type(node)(apply_mapping(m, node.left), apply_mapping(m, node.right))
    if isinstance(node, (Top, Bot)):
        return node
    if isinstance(node, (syntax.Eq, Lt, syntax.CongMod)):
        left = apply_mapping(m, node.left)
        right = apply_mapping(m, node.right)
        if isinstance(node, syntax.CongMod):
            return syntax.CongMod(node.modulus, left, right)
        return type(node)(left, right)
    if isinstance(node, Not):
        return Not(apply_mapping(m, node.body))
    if isinstance(node, (And, Or)):
        return type(node)(tuple(apply_mapping(m, a) for a in node.args))
    raise MappingError(
        f"cannot translate {type(node).__name__}: only quantifier-free linear "
        "formulas over high-level fluents are translatable"
    )


@dataclass(frozen=True)
class PhiEntry:
    """One deduplicated designated body: ∃ vars . body, with the high-level
    fluents it defines."""

    vars: tuple[Var, ...]
    body: Formula
    sources: tuple[str, ...]

    @property
    def closure(self) -> Formula:
        f: Formula = self.body
        for v in reversed(self.vars):
            f = Exists(v, f)
        return f


def strip_exists(f: Formula) -> tuple[tuple[Var, ...], Formula]:
    """Split a formula into its leading existential binders and the matrix."""
    vs: list[Var] = []
    while isinstance(f, Exists):
        vs.append(f.var)
        f = f.body
    return tuple(vs), f


def phi_set(m: RefinementMapping) -> tuple[PhiEntry, ...]:
    """The designated bodies: each predicate definition stripped of its
    existential prefix and each counting body with its counting variables.

    Entries whose closures coincide up to bound-variable renaming are merged,
    keeping the first form and accumulating sources.  Order follows the
    mapping's declarations.
    """
    entries: list[PhiEntry] = []

    def add(vs: tuple[Var, ...], body: Formula, source: str) -> None:
        closure = PhiEntry(vs, body, ()).closure
        for i, e in enumerate(entries):
            if alpha_equal(normalize(e.closure), normalize(closure)):
                entries[i] = PhiEntry(e.vars, e.body, e.sources + (source,))
                return
        entries.append(PhiEntry(vs, body, (source,)))

    for name, f in m.preds.items():
        vs, body = strip_exists(f)
        add(vs, body, name)
    for name, c in m.fns.items():
        if not isinstance(c, Count):
            raise MappingError(f"definition of {name} must be a counting term")
        add(c.vars, c.body, name)
    return tuple(entries)


def mapping_formula(m: RefinementMapping) -> Formula:
    """The conjunction asserting every high-level fluent equals its image.

    The result mixes both vocabularies; it documents what abstraction
    enforces by construction and feeds the projection oracle's description.
    """
    parts: list[Formula] = []
    for name, f in m.preds.items():
        atom = PredFluent(name)
        parts.append(conj([implies(atom, f), implies(f, atom)]))
    for name, c in m.fns.items():
        parts.append(syntax.Eq(FluentFn(name), c))
    return conj(parts)


def designated_atoms(m: RefinementMapping) -> tuple[tuple[Formula, Formula], ...]:
    """Pairs of (closed low-level formula, high-level atom it denotes).

    Each propositional fluent contributes its definition paired with the atom
    itself; each integer fluent contributes the existential closure of its
    counting body paired with the atom ``fluent > 0``.
    """
    out: list[tuple[Formula, Formula]] = []
    for name in m.preds:
        out.append((normalize(m.preds[name]), PredFluent(name)))
    for name in m.fns:
        c = m.fns[name]
        body: Formula = c.body
        for v in reversed(c.vars):
            body = Exists(v, body)
        out.append((normalize(body), Lt(IntConst(0), FluentFn(name))))
    return tuple(out)


def _translate_atom(
    f: Formula, atoms: tuple[tuple[Formula, Formula], ...]
) -> Formula | None:
    matches = [high for low, high in atoms if alpha_equal(normalize(f), low)]
    if len(matches) > 1:
        raise MappingError(
            "ambiguous designated formula: matches "
            + " and ".join(syntax_names(matches))
        )
    return matches[0] if matches else None


def syntax_names(atoms: list[Formula]) -> list[str]:
    out = []
    for a in atoms:
        if isinstance(a, PredFluent):
            out.append(a.name)
        elif isinstance(a, Lt) and isinstance(a.right, FluentFn):
            out.append(a.right.name)
        else:
            out.append(repr(a))
    return out


def _inverse(f: Formula, atoms) -> Formula | None:
    hit = _translate_atom(f, atoms)
    if hit is not None:
        return hit
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, Not):
        body = _inverse(f.body, atoms)
        return None if body is None else Not(body)
    if isinstance(f, (And, Or)):
        parts = [_inverse(a, atoms) for a in f.args]
        if any(p is None for p in parts):
            return None
        return type(f)(tuple(parts))
    return None


def is_prop_exists(m: RefinementMapping, f: Formula) -> bool:
    """True iff f is a Boolean combination of the designated formulas."""
    return _inverse(f, designated_atoms(m)) is not None


def inverse_translate(m: RefinementMapping, f: Formula) -> Formula:
    """Rewrite a Boolean combination of designated formulas into high-level
    language, conjoining nonnegativity for every integer fluent that appears.
    """
    atoms = designated_atoms(m)
    core = _inverse(f, atoms)
    if core is None:
        raise MappingError(
            "formula is not a Boolean combination of the designated formulas"
        )
    used = sorted(_fn_names(core))
    bounds = [syntax.ge(FluentFn(name), IntConst(0)) for name in used]
    return normalize(conj([core, *bounds]))


def _fn_names(f: Formula) -> set[str]:
    names: set[str] = set()

    def walk(node: Node) -> None:
        if isinstance(node, FluentFn):
            names.add(node.name)
        elif isinstance(node, (syntax.Add, syntax.Sub)):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, (syntax.Eq, Lt, syntax.CongMod)):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Not):
            walk(node.body)
        elif isinstance(node, (And, Or)):
            for a in node.args:
                walk(a)

    walk(f)
    return names
