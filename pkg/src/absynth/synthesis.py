"""Synthesis of the integer-counter theory from a classified mapping.

The compiler pass proper: given the relational theory, the refinement
mapping with verified witnesses, and the classification table, assemble the
high-level theory —

* successor-state axioms directly from the classification labels
  (Enabling actions populate add clauses, Disabling actions delete clauses,
  Incremental/Decremental actions set ``f ± 1``, invariant labels
  contribute nothing and the frame is implicit);
* the initial knowledge base and each action precondition by translating
  the corresponding verified witness into the high-level language.

Translation can leave behind conjuncts that are redundant in linear
arithmetic (``f >= 0`` next to ``f > 0``).  A separate, clearly labeled
simplification pass prunes them, so both the literal translation output and
the pruned form are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .mapping import MappingError, RefinementMapping, UNKNOWN_LABEL, inverse_translate
from .printer import unparse
from .report import CertReport
from .syntax import (
    Add,
    And,
    Bot,
    FluentFn,
    Formula,
    IntConst,
    Or,
    Sub,
    ast_key,
    normalize,
)
from .theory import (
    ActionDecl,
    EffectClause,
    FnSSA,
    HighLIBAT,
    LowBAT,
    PredSSA,
    SetClause,
)
from .verify import (
    DECREMENTAL,
    DISABLING,
    ENABLING,
    FN_INVARIANT,
    INCREMENTAL,
    INVARIANT,
    ClassEntry,
)


class SynthesisError(ValueError):
    """Raised when synthesis inputs are incomplete or unverified."""


@dataclass(frozen=True)
class SynthesisInput:
    """Everything synthesis consumes, with the evidence it was checked."""

    low: LowBAT
    m: RefinementMapping
    classifications: dict[tuple[str, str], ClassEntry]
    report: CertReport | None = None


def simplify_lia(f: Formula) -> Formula:
    """Prune conjuncts that a sibling conjunct subsumes: inside a
    conjunction, a disjunction is dropped when one of its disjuncts is
    itself a conjunct (A ∧ (A ∨ B) ≡ A).  This covers the redundancy the
    witness translation introduces — nonnegativity bounds ``f >= 0``
    (a disjunction ``f = 0 ∨ f > 0`` once normalized) next to a strict
    bound ``f > 0``.  Purely syntactic after normalization; no solver.
    """
    f = normalize(f)
    if not isinstance(f, And):
        return f
    keys = {ast_key(a) for a in f.args}
    kept = []
    for a in f.args:
        if isinstance(a, Or) and any(ast_key(d) in keys for d in a.args):
            continue
        kept.append(a)
    return normalize(And(tuple(kept)))


def synth_ssa(
    classifications: dict[tuple[str, str], ClassEntry],
) -> tuple[dict[str, PredSSA], dict[str, FnSSA]]:
    """Successor-state axioms from the classification table.

    Purely syntactic: permuting the table yields identical output because
    clauses are sorted by action name.  Unknown labels are errors.
    """
    pred_fluents: list[str] = []
    fn_fluents: list[str] = []
    by_fluent: dict[str, list[ClassEntry]] = {}
    for (alpha, fluent), entry in classifications.items():
        if entry.label == UNKNOWN_LABEL:
            raise SynthesisError(
                f"({alpha}, {fluent}) is unclassified; classify it or assume "
                "a label before synthesizing"
            )
        if entry.label in (ENABLING, DISABLING, INVARIANT):
            if fluent not in pred_fluents:
                pred_fluents.append(fluent)
        else:
            if fluent not in fn_fluents:
                fn_fluents.append(fluent)
        by_fluent.setdefault(fluent, []).append(entry)
    pred_ssas: dict[str, PredSSA] = {}
    for fluent in pred_fluents:
        clauses: list[EffectClause] = []
        for entry in sorted(by_fluent[fluent], key=lambda e: e.action):
            if entry.label == ENABLING:
                clauses.append(EffectClause("add", entry.action))
            elif entry.label == DISABLING:
                clauses.append(EffectClause("del", entry.action))
        clauses.sort(key=lambda c: (c.polarity, c.action))
        pred_ssas[fluent] = PredSSA(fluent, (), tuple(clauses))
    fn_ssas: dict[str, FnSSA] = {}
    for fluent in fn_fluents:
        sets: list[SetClause] = []
        for entry in sorted(by_fluent[fluent], key=lambda e: e.action):
            if entry.label == INCREMENTAL:
                sets.append(
                    SetClause(entry.action, Add(FluentFn(fluent), IntConst(1)))
                )
            elif entry.label == DECREMENTAL:
                sets.append(
                    SetClause(entry.action, Sub(FluentFn(fluent), IntConst(1)))
                )
        fn_ssas[fluent] = FnSSA(fluent, tuple(sets))
    return pred_ssas, fn_ssas


def synth_init(
    low: LowBAT, m: RefinementMapping, witness: Formula | None, simplify: bool = False
) -> Formula:
    """The high-level initial knowledge base, from the verified witness for
    the low-level one: its translation through the designated formulas."""
    if witness is None:
        raise SynthesisError("no witness for the initial knowledge base")
    try:
        out = normalize(inverse_translate(m, witness))
    except MappingError as exc:
        raise SynthesisError(f"initial-state witness: {exc}") from exc
    return simplify_lia(out) if simplify else out


def synth_precond(
    low: LowBAT,
    m: RefinementMapping,
    alpha: str,
    witness: Formula | None,
    simplify: bool = False,
) -> Formula:
    """One high-level action precondition, from the verified witness for the
    refinement's executability condition."""
    if witness is None:
        raise SynthesisError(f"no witness for the executability of {alpha}")
    try:
        out = normalize(inverse_translate(m, witness))
    except MappingError as exc:
        raise SynthesisError(f"witness for {alpha}: {exc}") from exc
    return simplify_lia(out) if simplify else out


def synthesize(
    inp: SynthesisInput, simplify: bool = True
) -> tuple[HighLIBAT, dict]:
    """Assemble the full high-level theory plus a provenance record.

    Refuses unverified input: a restriction report with failures, or any
    unclassified pair.  The returned provenance records the witnesses used,
    the verification bound and provenance of every classification and
    restriction verdict, warnings (unsatisfiable witnesses), and whether
    simplification ran.  Output is deterministic and passes validation.
    """
    low, m = inp.low, inp.m
    if inp.report is not None:
        bad = [c.name for c in inp.report.failures()]
        if bad:
            raise SynthesisError(
                "restriction check(s) failed: " + ", ".join(bad)
            )
    warnings: list[str] = []
    pred_ssas, fn_ssas = synth_ssa(inp.classifications)
    for name in m.preds:
        pred_ssas.setdefault(name, PredSSA(name, (), ()))
    for name in m.fns:
        fn_ssas.setdefault(name, FnSSA(name, ()))
    init = synth_init(low, m, m.witnesses.get("init"), simplify)
    if isinstance(init, Bot):
        warnings.append("the initial knowledge base is unsatisfiable")
    actions: dict[str, ActionDecl] = {}
    for alpha in m.actions:
        pre = synth_precond(low, m, alpha, m.witnesses.get(alpha), simplify)
        if isinstance(pre, Bot):
            warnings.append(f"action {alpha} is never executable")
        actions[alpha] = ActionDecl(alpha, (), pre)
    high = HighLIBAT(
        name=m.name or f"{low.name}_abstract",
        preds=tuple(m.preds),
        fns=tuple(m.fns),
        actions=actions,
        pred_ssas=pred_ssas,
        fn_ssas=fn_ssas,
        init=init,
    )
    problems = high.validate()
    if problems:
        raise SynthesisError(
            "synthesized theory failed validation (internal error): "
            + "; ".join(problems)
        )
    provenance: dict = {
        "source": low.name,
        "mapping": m.name,
        "simplified": simplify,
        "witnesses": {k: unparse(w) for k, w in sorted(m.witnesses.items())},
        "classifications": {
            f"{alpha}:{fluent}": {"label": e.label, "provenance": e.provenance}
            for (alpha, fluent), e in sorted(inp.classifications.items())
        },
        "restrictions": (
            {
                c.name: {"verdict": c.verdict, "bound": c.bound}
                for c in inp.report.checks
            }
            if inp.report is not None
            else "assumed"
        ),
        "warnings": warnings,
    }
    return high, provenance
