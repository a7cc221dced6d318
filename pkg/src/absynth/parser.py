"""Text format for action theories, refinement mappings, and seed instances.

Block structure (``#`` starts a line comment, ``;`` ends a declaration):

    bat low blocks {
      const C;
      pred on(x, y);
      action pickup(x) poss: FORMULA;
      ssa on(x, y) { add stack(x, y); del unstack(x, y) if FORMULA; }
      init: FORMULA;                   # closed; several init lines conjoin
      constraint: FORMULA;             # free variables close universally
    }
    bat high counters {
      pred Holding;
      fn Num;
      action PickAboveC poss: FORMULA;
      ssa Holding { add PickAboveC; del Putdown if FORMULA; }
      ssa Num { set PickAboveC: TERM if FORMULA; }
      init: FORMULA;
    }
    mapping counters {
      Holding := FORMULA;              # closed low-level formula
      Num := count x. FORMULA;         # closed counting term
      PickAboveC := pi x, y. FORMULA?; act(x, y);
      witness init := FORMULA;         # Boolean combination of definitions
      witness PickAboveC := FORMULA;
      assume Putdown : Num := FnInvariant;   # skip bounded verification
    }
    instance tower3 { objects B1, B2; on(B1, B2); on(B2, C); }

Formulas::

    FORMULA -> FORMULA            FORMULA || FORMULA        FORMULA && FORMULA
    !FORMULA                      exists x, y. FORMULA      forall x, y. FORMULA
    true   false                  p(args)   p*(args)   p+(args)
    tc[u; v: FORMULA](s; t)       TERM = TERM     TERM != TERM
    TERM < TERM   TERM <= TERM    TERM > TERM     TERM >= TERM   TERM ~k~ TERM

Terms::

    0  1  -2        TERM + TERM   TERM - TERM     count x, y. FORMULA   names

Programs::

    nil    act(args)    FORMULA?    P; P    P | P    (P)*    pi x, y. P

Blocks resolve names against the declarations in force, so every symbol must
be declared before use; the mapping block reads its right-hand sides in the
low-level vocabulary.  Standalone formulas, terms, and programs parse without
declarations, in which case unknown names classify by spelling: lowercase is
an object variable, all-caps is an object constant, mixed case is an integer
fluent, and a bare name in formula position is a propositional atom.  Inside
program sequences, a test that begins with a name followed by ``=`` must be
parenthesized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NoReturn

from . import syntax
from .mapping import FN_LABELS, PRED_LABELS, RefinementMapping
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
    conj,
    free_vars,
    reflexive_tc,
    sort_of,
    strict_tc,
)
from .theory import (
    ActionDecl,
    EffectClause,
    FnSSA,
    HighLIBAT,
    Instance,
    LowBAT,
    PredSSA,
    SetClause,
)


class ParseError(ValueError):
    """A syntax, sort, or resolution error with a source position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "op", or "eof"
    text: str
    line: int
    col: int


_TWO_CHAR = ("->", "<=", ">=", "!=", "&&", "||", ":=")
_ONE_CHAR = set("!=<>~?;:|*+-(){}[],.")


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            while j < n and text[j] == "'":
                j += 1
            toks.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if text[i : i + 2] in _TWO_CHAR:
            toks.append(Token("op", text[i : i + 2], line, col))
            i += 2
            col += 2
            continue
        if c in _ONE_CHAR:
            toks.append(Token("op", c, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


_RESERVED = frozenset("true false exists forall count tc pi nil if".split())
_DECL_WORDS = frozenset(
    "bat low high mapping instance const pred fn action poss ssa "
    "add del set init constraint witness assume objects".split()
)
_COMPARATORS = ("=", "!=", "<", "<=", ">", ">=", "~")


@dataclass
class Signature:
    """The symbols one theory level declares."""

    constants: set[str] = field(default_factory=set)
    preds: dict[str, int] = field(default_factory=dict)
    fns: set[str] = field(default_factory=set)
    actions: dict[str, int] = field(default_factory=dict)

    def knows(self, name: str) -> bool:
        return (
            name in self.constants
            or name in self.preds
            or name in self.fns
            or name in self.actions
        )


def signature_of(theory: LowBAT | HighLIBAT, extra_objects: Iterable[str] = ()) -> Signature:
    if isinstance(theory, LowBAT):
        return Signature(
            set(theory.constants) | set(extra_objects),
            dict(theory.fluents),
            set(),
            {n: len(d.params) for n, d in theory.actions.items()},
        )
    if isinstance(theory, HighLIBAT):
        return Signature(
            set(),
            {n: 0 for n in theory.preds},
            set(theory.fns),
            {n: 0 for n in theory.actions},
        )
    raise TypeError(f"not a theory: {theory!r}")


@dataclass
class Project:
    """Everything one source file can declare."""

    low: LowBAT | None = None
    high: HighLIBAT | None = None
    mapping: RefinementMapping | None = None
    instances: dict[str, Instance] = field(default_factory=dict)

    def validate(self) -> list[str]:
        problems: list[str] = []
        if self.low is not None:
            problems += [f"low: {p}" for p in self.low.validate()]
        if self.high is not None:
            problems += [f"high: {p}" for p in self.high.validate()]
        if self.mapping is not None:
            problems += [
                f"mapping: {p}" for p in self.mapping.validate(self.low, self.high)
            ]
        if self.low is not None:
            for inst in self.instances.values():
                names = set(self.low.constants) | set(inst.objects)
                for pred, args in inst.atoms:
                    arity = self.low.fluents.get(pred)
                    if arity is None:
                        problems.append(f"{inst.name}: unknown fluent {pred}")
                    elif arity != len(args):
                        problems.append(
                            f"{inst.name}: {pred} expects {arity} argument(s)"
                        )
                    for a in args:
                        if a not in names:
                            problems.append(f"{inst.name}: unknown object {a}")
        return problems


class _Parser:
    def __init__(self, text: str, sig: Signature | None = None, scope=()):
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig
        self.scope: list[str] = [str(s) for s in scope]
        self.auto_vars = False
        self.low_sig: Signature | None = None
        self.high_sig: Signature | None = None

    # ------------------------------------------------------------------
    # token plumbing

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind != "eof" and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.kind == "eof" or t.text != text:
            self.fail(f"expected {text!r}, found {self._show(t)}")
        self.i += 1
        return t

    def expect_eof(self) -> None:
        t = self.peek()
        if t.kind != "eof":
            self.fail(f"unexpected {self._show(t)}")

    @staticmethod
    def _show(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def fail(self, msg: str) -> NoReturn:
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    def ident(self, what: str = "name") -> str:
        t = self.peek()
        if t.kind != "ident":
            self.fail(f"expected {what}, found {self._show(t)}")
        if t.text in _RESERVED:
            self.fail(f"{t.text!r} is reserved")
        self.i += 1
        return t.text

    def int_lit(self) -> int:
        t = self.peek()
        if t.kind != "int":
            self.fail(f"expected an integer, found {self._show(t)}")
        self.i += 1
        return int(t.text)

    # ------------------------------------------------------------------
    # scopes and name resolution

    def _push(self, names: list[str]) -> None:
        self.scope.extend(names)

    def _pop(self, k: int) -> None:
        if k:
            del self.scope[-k:]

    def var_list(self) -> list[Var]:
        out = [Var(self.ident("variable"))]
        while self.accept(","):
            out.append(Var(self.ident("variable")))
        seen: set[str] = set()
        for v in out:
            if v.name in seen:
                self.fail(f"duplicate variable {v.name}")
            seen.add(v.name)
        return out

    def resolve_term_ident(self, name: str) -> Term:
        if name in self.scope:
            return Var(name)
        if self.sig is not None:
            if name in self.sig.constants:
                return ObjConst(name)
            if name in self.sig.fns:
                return FluentFn(name)
            if self.auto_vars and not self.sig.knows(name):
                return Var(name)
            if name in self.sig.preds:
                self.fail(f"predicate {name} used as a term")
            self.fail(f"unknown symbol {name}")
        if name[0].islower() or name[0] == "_":
            return Var(name)
        if name.isupper():
            return ObjConst(name)
        return FluentFn(name)

    def obj_term(self) -> Term:
        t = self.peek()
        if t.kind != "ident":
            self.fail(f"expected an object name, found {self._show(t)}")
        term = self.resolve_term_ident(self.ident("object name"))
        if sort_of(term) is not Sort.OBJECT:
            self.fail(f"{t.text} is not an object term")
        return term

    def paren_obj_terms(self) -> tuple[Term, ...]:
        self.expect("(")
        args: list[Term] = []
        if not self.at(")"):
            args.append(self.obj_term())
            while self.accept(","):
                args.append(self.obj_term())
        self.expect(")")
        return tuple(args)

    # ------------------------------------------------------------------
    # formulas

    def formula(self) -> Formula:
        left = self.or_formula()
        if self.accept("->"):
            return syntax.implies(left, self.formula())
        return left

    def or_formula(self) -> Formula:
        parts = [self.and_formula()]
        while self.accept("||"):
            parts.append(self.and_formula())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_formula(self) -> Formula:
        parts = [self.unary_formula()]
        while self.accept("&&"):
            parts.append(self.unary_formula())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary_formula(self) -> Formula:
        if self.accept("!"):
            return Not(self.unary_formula())
        t = self.peek()
        if t.kind == "ident" and t.text in ("exists", "forall"):
            self.next()
            vars = self.var_list()
            self.expect(".")
            self._push([v.name for v in vars])
            try:
                body = self.formula()
            finally:
                self._pop(len(vars))
            ctor = Exists if t.text == "exists" else Forall
            for v in reversed(vars):
                body = ctor(v, body)
            return body
        return self.atom_formula()

    def atom_formula(self) -> Formula:
        t = self.peek()
        if self.accept("true"):
            return Top()
        if self.accept("false"):
            return Bot()
        if t.kind == "ident" and t.text == "tc":
            return self.tc_formula()
        if (
            t.kind == "ident"
            and t.text not in _RESERVED
            and self.peek(1).text in ("+", "*")
            and self.peek(2).text == "("
        ):
            if self.sig is not None:
                if t.text in self.sig.preds:
                    return self.closure_atom()
            else:
                save = self.i
                try:
                    return self.closure_atom()
                except ParseError:
                    self.i = save
        save = self.i
        left: Term | None
        try:
            left = self.term()
        except ParseError:
            left = None
        if left is not None and self.peek().text in _COMPARATORS:
            return self.comparison(left)
        self.i = save
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        return self.pred_atom()

    def closure_atom(self) -> Formula:
        name = self.ident("predicate")
        star = self.next().text  # "+" or "*"
        args = self.paren_obj_terms()
        if len(args) == 0 or len(args) % 2:
            self.fail(f"closure of {name} needs an even number of arguments")
        if self.sig is not None:
            arity = self.sig.preds.get(name)
            if arity != len(args):
                self.fail(f"{name} expects {arity} argument(s), got {len(args)}")
        build = strict_tc if star == "+" else reflexive_tc
        return build(name, len(args), args)

    def comparison(self, left: Term) -> Formula:
        op = self.next().text
        if op == "~":
            k = self.int_lit()
            self.expect("~")
            right = self.term()
            if k <= 0:
                self.fail("modulus must be positive")
            self._want_int(left, "congruence")
            self._want_int(right, "congruence")
            return CongMod(k, left, right)
        right = self.term()
        if op in ("<", "<=", ">", ">="):
            self._want_int(left, "order comparison")
            self._want_int(right, "order comparison")
        elif sort_of(left) is not sort_of(right):
            self.fail("equality needs terms of the same sort")
        if op == "=":
            return Eq(left, right)
        if op == "!=":
            return syntax.ne(left, right)
        if op == "<":
            return Lt(left, right)
        if op == "<=":
            return syntax.le(left, right)
        if op == ">":
            return syntax.gt(left, right)
        return syntax.ge(left, right)

    def pred_atom(self) -> Formula:
        t = self.peek()
        if t.kind != "ident":
            self.fail(f"expected a formula, found {self._show(t)}")
        name = self.ident("predicate")
        args: tuple[Term, ...] = ()
        if self.at("("):
            args = self.paren_obj_terms()
        if self.sig is not None:
            if name in self.scope:
                self.fail(f"variable {name} is not a formula")
            arity = self.sig.preds.get(name)
            if arity is None:
                self.fail(f"unknown predicate {name}")
            if arity != len(args):
                self.fail(f"{name} expects {arity} argument(s), got {len(args)}")
        return PredFluent(name, args)

    def tc_formula(self) -> Formula:
        self.expect("tc")
        self.expect("[")
        xs = self.var_list()
        if self.accept(";"):
            ys = self.var_list()
        else:
            if len(xs) != 2:
                self.fail("tc with one variable list takes exactly two variables")
            xs, ys = xs[:1], xs[1:]
        if len(xs) != len(ys):
            self.fail("tc needs as many source as target variables")
        if {v.name for v in xs} & {v.name for v in ys}:
            self.fail("tc variables must be distinct")
        self.expect(":")
        names = [v.name for v in xs + ys]
        self._push(names)
        try:
            body = self.formula()
        finally:
            self._pop(len(names))
        self.expect("]")
        self.expect("(")
        first = [self.obj_term()]
        while self.accept(","):
            first.append(self.obj_term())
        if self.accept(";"):
            second = [self.obj_term()]
            while self.accept(","):
                second.append(self.obj_term())
        else:
            if len(first) != 2:
                self.fail("tc with one argument list takes exactly two arguments")
            first, second = first[:1], first[1:]
        self.expect(")")
        if len(first) != len(xs) or len(second) != len(ys):
            self.fail("tc argument count does not match its variable count")
        return TC(tuple(xs), tuple(ys), body, tuple(first), tuple(second))

    # ------------------------------------------------------------------
    # terms

    def _want_int(self, t: Term, what: str) -> None:
        if sort_of(t) is not Sort.INTEGER:
            self.fail(f"{what} needs integer terms")

    def term(self) -> Term:
        left = self.primary_term()
        while True:
            if self.accept("+"):
                ctor = Add
            elif self.accept("-"):
                ctor = Sub
            else:
                return left
            right = self.primary_term()
            self._want_int(left, "arithmetic")
            self._want_int(right, "arithmetic")
            left = ctor(left, right)

    def primary_term(self) -> Term:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntConst(int(t.text))
        if t.text == "-" and self.peek(1).kind == "int":
            self.next()
            return IntConst(-int(self.next().text))
        if t.kind == "ident" and t.text == "count":
            self.next()
            vars = self.var_list()
            self.expect(".")
            self._push([v.name for v in vars])
            try:
                body = self.formula()
            finally:
                self._pop(len(vars))
            return Count(tuple(vars), body)
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "ident":
            return self.resolve_term_ident(self.ident("term"))
        self.fail(f"expected a term, found {self._show(t)}")

    # ------------------------------------------------------------------
    # programs

    def program(self) -> Program:
        left = self.seq_program()
        if self.accept("|"):
            return Choice(left, self.program())
        return left

    def seq_program(self) -> Program:
        left = self.star_program()
        save = self.i
        if self.accept(";"):
            if self._starts_program():
                return Seq(left, self.seq_program())
            self.i = save
        return left

    def _starts_program(self) -> bool:
        t = self.peek()
        if t.kind == "int":
            return True
        if t.kind == "op":
            return t.text in ("(", "!", "-")
        if t.kind != "ident":
            return False
        if t.text == "witness":
            return False
        return self.peek(1).text != ":="

    def star_program(self) -> Program:
        p = self.primary_program()
        while self.accept("*"):
            p = Star(p)
        return p

    def primary_program(self) -> Program:
        t = self.peek()
        if t.kind == "ident" and t.text == "nil":
            self.next()
            return Nil()
        if t.kind == "ident" and t.text == "pi":
            self.next()
            vars = self.var_list()
            self.expect(".")
            self._push([v.name for v in vars])
            try:
                body = self.program()
            finally:
                self._pop(len(vars))
            for v in reversed(vars):
                body = Pick(v, body)
            return body
        save = self.i
        try:
            f = self.formula()
            if self.at("?"):
                self.next()
                return Test(f)
        except ParseError:
            pass
        self.i = save
        if self.accept("("):
            p = self.program()
            self.expect(")")
            return p
        return self.action_atom()

    def action_atom(self) -> Program:
        t = self.peek()
        if t.kind != "ident":
            self.fail(f"expected a program, found {self._show(t)}")
        name = self.ident("action")
        args: tuple[Term, ...] = ()
        if self.at("("):
            args = self.paren_obj_terms()
        if self.sig is not None:
            arity = self.sig.actions.get(name)
            if arity is None:
                self.fail(f"unknown action {name}")
            if arity != len(args):
                self.fail(f"{name} expects {arity} argument(s), got {len(args)}")
        return Act(name, args)

    # ------------------------------------------------------------------
    # declarations

    def parse_file(self) -> Project:
        project = Project()
        while self.peek().kind != "eof":
            if self.at("bat"):
                self.bat_block(project)
            elif self.at("mapping"):
                self.mapping_block(project)
            elif self.at("instance"):
                self.instance_block(project)
            else:
                self.fail("expected 'bat', 'mapping', or 'instance'")
        return project

    def _declare(self, sig: Signature, name: str) -> None:
        if name in _DECL_WORDS:
            self.fail(f"{name!r} cannot be used as a name here")
        if sig.knows(name):
            self.fail(f"duplicate declaration of {name}")

    def param_list(self) -> tuple[Var, ...]:
        if not self.at("("):
            return ()
        self.expect("(")
        if self.accept(")"):
            return ()
        vars = self.var_list()
        self.expect(")")
        return tuple(vars)

    def bat_block(self, project: Project) -> None:
        self.expect("bat")
        t = self.peek()
        if t.text not in ("low", "high"):
            self.fail("expected 'low' or 'high' after 'bat'")
        self.next()
        name = ""
        if self.peek().kind == "ident":
            name = self.ident("theory name")
        self.expect("{")
        if t.text == "low":
            if project.low is not None:
                self.fail("duplicate low theory")
            project.low = self.low_decls(name)
        else:
            if project.high is not None:
                self.fail("duplicate high theory")
            project.high = self.high_decls(name)
        self.expect("}")

    def low_decls(self, name: str) -> LowBAT:
        sig = Signature()
        self.sig = sig
        bat = LowBAT(name=name)
        inits: list[Formula] = []
        constraints: list[Formula] = []
        while not self.at("}"):
            if self.accept("const"):
                while True:
                    n = self.ident("constant name")
                    self._declare(sig, n)
                    sig.constants.add(n)
                    bat.constants += (n,)
                    if not self.accept(","):
                        break
                self.expect(";")
            elif self.accept("pred"):
                n = self.ident("fluent name")
                self._declare(sig, n)
                params = self.param_list()
                sig.preds[n] = len(params)
                bat.fluents[n] = len(params)
                self.expect(";")
            elif self.accept("fn"):
                self.fail("integer fluents belong in the high theory")
            elif self.accept("action"):
                n = self.ident("action name")
                self._declare(sig, n)
                params = self.param_list()
                sig.actions[n] = len(params)
                precond: Formula = Top()
                if self.accept("poss"):
                    self.expect(":")
                    self._push([v.name for v in params])
                    try:
                        precond = self.formula()
                    finally:
                        self._pop(len(params))
                self.expect(";")
                bat.actions[n] = ActionDecl(n, params, precond)
            elif self.accept("ssa"):
                fname = self.ident("fluent name")
                if fname not in sig.preds:
                    self.fail(f"unknown fluent {fname}")
                if fname in bat.ssas:
                    self.fail(f"duplicate successor-state axiom for {fname}")
                params = self.param_list()
                if len(params) != sig.preds[fname]:
                    self.fail(
                        f"{fname} has arity {sig.preds[fname]}, "
                        f"got {len(params)} parameter(s)"
                    )
                self.expect("{")
                clauses: list[EffectClause] = []
                while not self.at("}"):
                    clauses.append(self.effect_clause(params))
                self.expect("}")
                bat.ssas[fname] = PredSSA(fname, params, tuple(clauses))
            elif self.accept("init"):
                self.expect(":")
                inits.append(self.formula())
                self.expect(";")
            elif self.accept("constraint"):
                self.expect(":")
                self.auto_vars = True
                try:
                    f = self.formula()
                finally:
                    self.auto_vars = False
                self.expect(";")
                constraints.append(close_universally(f))
            else:
                self.fail("expected a declaration")
        bat.init = conj(inits)
        bat.constraints = tuple(constraints)
        self.low_sig = sig
        self.sig = None
        return bat

    def effect_clause(self, fluent_params: tuple[Var, ...]) -> EffectClause:
        t = self.peek()
        if t.text not in ("add", "del"):
            self.fail("expected 'add' or 'del'")
        self.next()
        aname = self.ident("action name")
        assert self.sig is not None
        if aname not in self.sig.actions:
            self.fail(f"unknown action {aname}")
        param_names = {v.name for v in fluent_params}
        pattern_vars: list[str] = []
        args: list[Term] = []
        if self.at("("):
            self.expect("(")
            if not self.at(")"):
                while True:
                    args.append(self._pattern_term(param_names, pattern_vars))
                    if not self.accept(","):
                        break
            self.expect(")")
        if len(args) != self.sig.actions[aname]:
            self.fail(
                f"{aname} expects {self.sig.actions[aname]} argument(s), "
                f"got {len(args)}"
            )
        condition: Formula = Top()
        if self.accept("if"):
            names = sorted(param_names | set(pattern_vars))
            self._push(names)
            try:
                condition = self.formula()
            finally:
                self._pop(len(names))
        self.expect(";")
        return EffectClause(t.text, aname, tuple(args), condition)

    def _pattern_term(self, param_names: set[str], pattern_vars: list[str]) -> Term:
        name = self.ident("argument")
        assert self.sig is not None
        if name in param_names or name in pattern_vars:
            return Var(name)
        if name in self.sig.constants:
            return ObjConst(name)
        if self.sig.knows(name):
            self.fail(f"{name} is not an object")
        pattern_vars.append(name)
        return Var(name)

    def high_decls(self, name: str) -> HighLIBAT:
        sig = Signature()
        self.sig = sig
        bat = HighLIBAT(name=name)
        inits: list[Formula] = []
        while not self.at("}"):
            if self.accept("pred"):
                n = self.ident("fluent name")
                self._declare(sig, n)
                if self.at("("):
                    self.fail("high-level fluents take no parameters")
                sig.preds[n] = 0
                bat.preds += (n,)
                self.expect(";")
            elif self.accept("fn"):
                n = self.ident("fluent name")
                self._declare(sig, n)
                sig.fns.add(n)
                bat.fns += (n,)
                self.expect(";")
            elif self.accept("action"):
                n = self.ident("action name")
                self._declare(sig, n)
                if self.at("("):
                    self.expect("(")
                    if not self.at(")"):
                        self.fail("high-level actions take no parameters")
                    self.expect(")")
                precond: Formula = Top()
                if self.accept("poss"):
                    self.expect(":")
                    precond = self.formula()
                self.expect(";")
                sig.actions[n] = 0
                bat.actions[n] = ActionDecl(n, (), precond)
            elif self.accept("ssa"):
                fname = self.ident("fluent name")
                if fname in sig.preds:
                    if fname in bat.pred_ssas:
                        self.fail(f"duplicate successor-state axiom for {fname}")
                    self.expect("{")
                    clauses: list[EffectClause] = []
                    while not self.at("}"):
                        clauses.append(self.high_effect_clause())
                    self.expect("}")
                    bat.pred_ssas[fname] = PredSSA(fname, (), tuple(clauses))
                elif fname in sig.fns:
                    if fname in bat.fn_ssas:
                        self.fail(f"duplicate successor-state axiom for {fname}")
                    self.expect("{")
                    sets: list[SetClause] = []
                    while not self.at("}"):
                        sets.append(self.set_clause())
                    self.expect("}")
                    bat.fn_ssas[fname] = FnSSA(fname, tuple(sets))
                else:
                    self.fail(f"unknown fluent {fname}")
            elif self.accept("init"):
                self.expect(":")
                inits.append(self.formula())
                self.expect(";")
            elif self.at("const") or self.at("constraint"):
                self.fail("high theories have no constants or constraints")
            else:
                self.fail("expected a declaration")
        bat.init = conj(inits)
        self.high_sig = sig
        self.sig = None
        return bat

    def high_effect_clause(self) -> EffectClause:
        t = self.peek()
        if t.text not in ("add", "del"):
            self.fail("expected 'add' or 'del'")
        self.next()
        aname = self.ident("action name")
        assert self.sig is not None
        if aname not in self.sig.actions:
            self.fail(f"unknown action {aname}")
        condition: Formula = Top()
        if self.accept("if"):
            condition = self.formula()
        self.expect(";")
        return EffectClause(t.text, aname, (), condition)

    def set_clause(self) -> SetClause:
        self.expect("set")
        aname = self.ident("action name")
        assert self.sig is not None
        if aname not in self.sig.actions:
            self.fail(f"unknown action {aname}")
        self.expect(":")
        value = self.term()
        self._want_int(value, "fluent assignment")
        condition: Formula = Top()
        if self.accept("if"):
            condition = self.formula()
        self.expect(";")
        return SetClause(aname, value, condition)

    def mapping_block(self, project: Project) -> None:
        self.expect("mapping")
        name = ""
        if self.peek().kind == "ident":
            name = self.ident("mapping name")
        if project.mapping is not None:
            self.fail("duplicate mapping")
        if project.low is None or project.high is None:
            self.fail("a mapping needs both theories declared first")
        self.expect("{")
        m = RefinementMapping(name=name)
        assert self.low_sig is not None and self.high_sig is not None
        self.sig = self.low_sig
        while not self.at("}"):
            if self.accept("witness"):
                target = "init" if self.accept("init") else self.ident("action name")
                if target != "init" and target not in self.high_sig.actions:
                    self.fail(f"{target} is not a high-level action")
                if target in m.witnesses:
                    self.fail(f"duplicate witness for {target}")
                self.expect(":=")
                f = self.formula()
                self.expect(";")
                if free_vars(f):
                    self.fail(f"witness for {target} must be closed")
                m.witnesses[target] = f
                continue
            if self.accept("assume"):
                act = self.ident("action name")
                if act not in self.high_sig.actions:
                    self.fail(f"{act} is not a high-level action")
                self.expect(":")
                fl = self.ident("fluent name")
                if fl in self.high_sig.preds:
                    allowed = PRED_LABELS
                elif fl in self.high_sig.fns:
                    allowed = FN_LABELS
                else:
                    self.fail(f"{fl} is not a high-level fluent")
                self.expect(":=")
                label = self.ident("classification label")
                if label not in allowed:
                    self.fail(
                        f"label for {fl} must be one of " + ", ".join(allowed)
                    )
                if (act, fl) in m.assumed:
                    self.fail(f"duplicate assumption for ({act}, {fl})")
                self.expect(";")
                m.assumed[(act, fl)] = label
                continue
            lhs = self.ident("high-level symbol")
            self.expect(":=")
            if lhs in m.preds or lhs in m.fns or lhs in m.actions:
                self.fail(f"duplicate definition of {lhs}")
            if lhs in self.high_sig.preds:
                f = self.formula()
                if free_vars(f):
                    self.fail(f"definition of {lhs} must be closed")
                m.preds[lhs] = f
            elif lhs in self.high_sig.fns:
                tm = self.term()
                if not isinstance(tm, Count):
                    self.fail(f"{lhs} must map to a counting term")
                if free_vars(tm):
                    self.fail(f"definition of {lhs} must be closed")
                m.fns[lhs] = tm
            elif lhs in self.high_sig.actions:
                m.actions[lhs] = self.program()
            else:
                self.fail(f"{lhs} is not declared in the high theory")
            self.expect(";")
        self.expect("}")
        self.sig = None
        project.mapping = m

    def instance_block(self, project: Project) -> None:
        self.expect("instance")
        name = self.ident("instance name")
        if project.low is None:
            self.fail("an instance needs the low theory declared first")
        if name in project.instances:
            self.fail(f"duplicate instance {name}")
        assert self.low_sig is not None
        self.expect("{")
        objects: list[str] = []
        atoms: list[tuple[str, tuple[str, ...]]] = []
        while not self.at("}"):
            if self.accept("objects"):
                while True:
                    n = self.ident("object name")
                    if n in objects or self.low_sig.knows(n):
                        self.fail(f"duplicate name {n}")
                    objects.append(n)
                    if not self.accept(","):
                        break
                self.expect(";")
                continue
            pname = self.ident("fluent name")
            if pname not in self.low_sig.preds:
                self.fail(f"unknown fluent {pname}")
            args: list[str] = []
            if self.at("("):
                self.expect("(")
                if not self.at(")"):
                    while True:
                        a = self.ident("object name")
                        if a not in objects and a not in self.low_sig.constants:
                            self.fail(f"unknown object {a}")
                        args.append(a)
                        if not self.accept(","):
                            break
                self.expect(")")
            if len(args) != self.low_sig.preds[pname]:
                self.fail(
                    f"{pname} expects {self.low_sig.preds[pname]} argument(s), "
                    f"got {len(args)}"
                )
            self.expect(";")
            atoms.append((pname, tuple(args)))
        self.expect("}")
        project.instances[name] = Instance(name, tuple(objects), tuple(atoms))


def close_universally(f: Formula) -> Formula:
    """Universally close a formula over its free variables, in name order."""
    for v in sorted(free_vars(f), key=lambda v: v.name, reverse=True):
        f = Forall(v, f)
    return f


def parse_formula(text: str, sig: Signature | None = None, scope=()) -> Formula:
    p = _Parser(text, sig, scope)
    f = p.formula()
    p.expect_eof()
    return f


def parse_term(text: str, sig: Signature | None = None, scope=()) -> Term:
    p = _Parser(text, sig, scope)
    t = p.term()
    p.expect_eof()
    return t


def parse_program(text: str, sig: Signature | None = None, scope=()) -> Program:
    p = _Parser(text, sig, scope)
    prog = p.program()
    p.expect_eof()
    return prog


def parse_project(text: str) -> Project:
    return _Parser(text).parse_file()


def load_project(path) -> Project:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_project(handle.read())
