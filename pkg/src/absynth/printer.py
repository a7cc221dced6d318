"""Canonical text rendering for terms, formulas, and programs.

unparse is a right inverse of the parser: parsing its output reproduces the
input node exactly (sugar forms such as p+, p*, <=, and != re-expand to the
same core nodes they were printed from).
"""

from __future__ import annotations

from . import syntax
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
    Node,
    Not,
    ObjConst,
    Or,
    Pick,
    PredFluent,
    Program,
    Seq,
    Star,
    Sub,
    TC,
    Term,
    Test,
    Top,
    Var,
)

_TERM_ATOM = 3
_TERM_SUM = 2
_TERM_COUNT = 1

_F_ATOM = 5
_F_NOT = 4
_F_AND = 3
_F_OR = 2
_F_QUANT = 1

_P_ATOM = 5
_P_STAR = 4
_P_SEQ = 3
_P_CHOICE = 2
_P_PICK = 1


def unparse(node: Node) -> str:
    if isinstance(node, (IntConst, ObjConst, Var, Add, Sub, FluentFn, Count)):
        return _term(node, 0)
    if isinstance(node, (Nil, Act, Test, Seq, Choice, Pick, Star)):
        return _program(node, 0)
    return _formula(node, 0)


# ---------------------------------------------------------------------------
# Terms


def _term(t: Term, need: int) -> str:
    if isinstance(t, IntConst):
        return str(t.value)
    if isinstance(t, (ObjConst, Var, FluentFn)):
        return t.name
    if isinstance(t, Add):
        s = f"{_term(t.left, _TERM_SUM)} + {_term(t.right, _TERM_SUM + 1)}"
        return f"({s})" if _TERM_SUM < need else s
    if isinstance(t, Sub):
        s = f"{_term(t.left, _TERM_SUM)} - {_term(t.right, _TERM_SUM + 1)}"
        return f"({s})" if _TERM_SUM < need else s
    if isinstance(t, Count):
        names = ", ".join(v.name for v in t.vars)
        s = f"count {names}. {_formula(t.body, 0)}"
        return f"({s})" if _TERM_COUNT < need else s
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Formulas


def _match_le(f: Formula):
    """The <= abbreviation, printed only when reparsing rebuilds f exactly."""
    if not isinstance(f, Or) or len(f.args) != 2:
        return None
    lt = f.args[1]
    if isinstance(lt, Lt) and f == syntax.le(lt.left, lt.right):
        return lt.left, lt.right
    return None


def _match_plain_tc(f: Formula):
    """The p* abbreviation, printed only when reparsing rebuilds f exactly."""
    if not isinstance(f, TC) or not isinstance(f.body, PredFluent):
        return None
    args = f.src + f.dst
    if f == syntax.reflexive_tc(f.body.name, len(args), args):
        return f.body.name, f.src, f.dst
    return None


def _match_strict_tc(f: Formula):
    """The p+ abbreviation, printed only when reparsing rebuilds f exactly."""
    if not isinstance(f, And) or len(f.args) != 2 or not isinstance(f.args[0], TC):
        return None
    tc = f.args[0]
    if not isinstance(tc.body, PredFluent):
        return None
    args = tc.src + tc.dst
    if f == syntax.strict_tc(tc.body.name, len(args), args):
        return tc.body.name, tc.src, tc.dst
    return None


def _comparison(op_lt: bool, a: Term, b: Term) -> str:
    # A constant on the small side reads better flipped: 0 < Num is Num > 0.
    flip = isinstance(a, IntConst) and not isinstance(b, IntConst)
    la, lb = _term(a, _TERM_SUM), _term(b, _TERM_SUM)
    if op_lt:
        return f"{lb} > {la}" if flip else f"{la} < {lb}"
    return f"{lb} >= {la}" if flip else f"{la} <= {lb}"


def _quant_run(f: Formula):
    kind = type(f)
    names = []
    while isinstance(f, kind):
        names.append(f.var.name)
        f = f.body
    return names, f


def _formula(f: Formula, need: int) -> str:
    s, level = _formula_raw(f)
    return f"({s})" if level < need else s


def _formula_raw(f: Formula) -> tuple[str, int]:
    if isinstance(f, Top):
        return "true", _F_ATOM
    if isinstance(f, Bot):
        return "false", _F_ATOM
    if isinstance(f, PredFluent):
        if not f.args:
            return f.name, _F_ATOM
        args = ", ".join(_term(a, 0) for a in f.args)
        return f"{f.name}({args})", _F_ATOM
    if isinstance(f, Eq):
        return f"{_term(f.left, _TERM_SUM)} = {_term(f.right, _TERM_SUM)}", _F_ATOM
    if isinstance(f, Lt):
        return _comparison(True, f.left, f.right), _F_ATOM
    if isinstance(f, CongMod):
        l, r = _term(f.left, _TERM_SUM), _term(f.right, _TERM_SUM)
        return f"{l} ~{f.modulus}~ {r}", _F_ATOM
    le = _match_le(f)
    if le is not None:
        return _comparison(False, le[0], le[1]), _F_ATOM
    strict = _match_strict_tc(f)
    if strict is not None:
        name, src, dst = strict
        args = ", ".join(_term(t, 0) for t in src + dst)
        return f"{name}+({args})", _F_ATOM
    plain = _match_plain_tc(f)
    if plain is not None:
        name, src, dst = plain
        args = ", ".join(_term(t, 0) for t in src + dst)
        return f"{name}*({args})", _F_ATOM
    if isinstance(f, TC):
        xs = ", ".join(v.name for v in f.xs)
        ys = ", ".join(v.name for v in f.ys)
        body = _formula(f.body, 0)
        if len(f.xs) == 1:
            args = f"{_term(f.src[0], 0)}, {_term(f.dst[0], 0)}"
            return f"tc[{xs}, {ys}: {body}]({args})", _F_ATOM
        src = ", ".join(_term(t, 0) for t in f.src)
        dst = ", ".join(_term(t, 0) for t in f.dst)
        return f"tc[{xs}; {ys}: {body}]({src}; {dst})", _F_ATOM
    if isinstance(f, Not):
        if isinstance(f.body, Eq):
            l = _term(f.body.left, _TERM_SUM)
            r = _term(f.body.right, _TERM_SUM)
            return f"{l} != {r}", _F_ATOM
        return f"!{_formula(f.body, _F_ATOM)}", _F_NOT
    if isinstance(f, And):
        return " && ".join(_formula(a, _F_AND + 1) for a in f.args), _F_AND
    if isinstance(f, Or):
        return " || ".join(_formula(a, _F_OR + 1) for a in f.args), _F_OR
    if isinstance(f, Exists):
        names, body = _quant_run(f)
        return f"exists {', '.join(names)}. {_formula(body, 0)}", _F_QUANT
    if isinstance(f, Forall):
        names, body = _quant_run(f)
        return f"forall {', '.join(names)}. {_formula(body, 0)}", _F_QUANT
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Programs


def _program(p: Program, need: int) -> str:
    s, level = _program_raw(p)
    return f"({s})" if level < need else s


def _program_raw(p: Program) -> tuple[str, int]:
    if isinstance(p, Nil):
        return "nil", _P_ATOM
    if isinstance(p, Act):
        if not p.args:
            return p.name, _P_ATOM
        args = ", ".join(_term(a, 0) for a in p.args)
        return f"{p.name}({args})", _P_ATOM
    if isinstance(p, Test):
        return f"{_formula(p.cond, 0)}?", _P_ATOM
    if isinstance(p, Seq):
        return f"{_program(p.first, _P_SEQ + 1)}; {_program(p.second, _P_SEQ)}", _P_SEQ
    if isinstance(p, Choice):
        left = _program(p.left, _P_CHOICE + 1)
        return f"{left} | {_program(p.right, _P_CHOICE)}", _P_CHOICE
    if isinstance(p, Pick):
        names = []
        while isinstance(p, Pick):
            names.append(p.var.name)
            p = p.body
        return f"pi {', '.join(names)}. {_program(p, 0)}", _P_PICK
    if isinstance(p, Star):
        return f"({_program(p.body, 0)})*", _P_ATOM
    raise TypeError(f"not a program: {p!r}")


# ---------------------------------------------------------------------------
# Declaration blocks


def _header(kind: str, name: str) -> str:
    return " ".join(part for part in (kind, name) if part) + " {"


def _param_group(params) -> str:
    if not params:
        return ""
    return "(" + ", ".join(v.name for v in params) + ")"


def _effect_line(clause) -> str:
    args = ""
    if clause.args:
        args = "(" + ", ".join(_term(a, 0) for a in clause.args) + ")"
    cond = "" if isinstance(clause.condition, Top) else f" if {unparse(clause.condition)}"
    return f"    {clause.polarity} {clause.action}{args}{cond};"


def render_low(bat) -> str:
    """Render a relational theory as a ``bat low`` block."""
    from .syntax import Var as _Var

    lines = [_header("bat low", bat.name)]
    if bat.constants:
        lines.append("  const " + ", ".join(bat.constants) + ";")
    for name, arity in bat.fluents.items():
        ssa = bat.ssas.get(name)
        if ssa is not None and len(ssa.params) == arity:
            params = ssa.params
        else:
            params = tuple(_Var(f"x{i}") for i in range(arity))
        lines.append(f"  pred {name}{_param_group(params)};")
    for decl in bat.actions.values():
        poss = "" if isinstance(decl.precond, Top) else f" poss: {unparse(decl.precond)}"
        lines.append(f"  action {decl.name}{_param_group(decl.params)}{poss};")
    for name, ssa in bat.ssas.items():
        lines.append(f"  ssa {name}{_param_group(ssa.params)} {{")
        lines.extend(_effect_line(c) for c in ssa.clauses)
        lines.append("  }")
    if not isinstance(bat.init, Top):
        lines.append(f"  init: {unparse(bat.init)};")
    for c in bat.constraints:
        lines.append(f"  constraint: {unparse(c)};")
    lines.append("}")
    return "\n".join(lines)


def render_high(bat) -> str:
    """Render an integer-counter theory as a ``bat high`` block."""
    lines = [_header("bat high", bat.name)]
    for name in bat.preds:
        lines.append(f"  pred {name};")
    for name in bat.fns:
        lines.append(f"  fn {name};")
    for decl in bat.actions.values():
        poss = "" if isinstance(decl.precond, Top) else f" poss: {unparse(decl.precond)}"
        lines.append(f"  action {decl.name}{poss};")
    for name, ssa in bat.pred_ssas.items():
        lines.append(f"  ssa {name} {{")
        lines.extend(_effect_line(c) for c in ssa.clauses)
        lines.append("  }")
    for name, ssa in bat.fn_ssas.items():
        lines.append(f"  ssa {name} {{")
        for c in ssa.clauses:
            cond = "" if isinstance(c.condition, Top) else f" if {unparse(c.condition)}"
            lines.append(f"    set {c.action}: {unparse(c.value)}{cond};")
        lines.append("  }")
    if not isinstance(bat.init, Top):
        lines.append(f"  init: {unparse(bat.init)};")
    lines.append("}")
    return "\n".join(lines)


def render_mapping(m) -> str:
    """Render a refinement mapping as a ``mapping`` block."""
    lines = [_header("mapping", m.name)]
    for name, f in m.preds.items():
        lines.append(f"  {name} := {unparse(f)};")
    for name, c in m.fns.items():
        lines.append(f"  {name} := {unparse(c)};")
    for name, p in m.actions.items():
        lines.append(f"  {name} := {unparse(p)};")
    for target, f in m.witnesses.items():
        lines.append(f"  witness {target} := {unparse(f)};")
    for (act, fl), label in m.assumed.items():
        lines.append(f"  assume {act} : {fl} := {label};")
    lines.append("}")
    return "\n".join(lines)


def render_instance(inst) -> str:
    """Render a seed instance block."""
    lines = [f"instance {inst.name} {{"]
    if inst.objects:
        lines.append("  objects " + ", ".join(inst.objects) + ";")
    for pred, args in inst.atoms:
        group = "" if not args else "(" + ", ".join(args) + ")"
        lines.append(f"  {pred}{group};")
    lines.append("}")
    return "\n".join(lines)


def render_project(project) -> str:
    """Render every section a project holds, in declaration order."""
    parts = []
    if project.low is not None:
        parts.append(render_low(project.low))
    if project.high is not None:
        parts.append(render_high(project.high))
    if project.mapping is not None:
        parts.append(render_mapping(project.mapping))
    for inst in project.instances.values():
        parts.append(render_instance(inst))
    return "\n\n".join(parts) + "\n"
