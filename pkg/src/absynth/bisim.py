"""Desk-scale certification that the synthesized high-level theory and the
low-level theory move in lockstep.

For one concrete initial state, the low-level transition system contains
every state reachable by executing refinements of high-level actions, with
edges labeled by the high-level action whose refinement produced them; the
high-level system is the reachable closure of the abstract initial state
under precondition-respecting high actions.  Certification checks, per
initial state:

* the two systems are bisimilar — related states have equal abstract
  images (atom), every low move is matched by a high move (forth), and
  every high move is matched by a low move (back);
* the abstract image of the initial state satisfies the high initial
  knowledge base;
* at every reachable low state, the high precondition's value at the
  abstract image coincides with the refinement's executability, and
  abstraction commutes with execution edge by edge;
* classified edge laws: edges of an Incremental/Decremental action change
  the fluent by exactly ±1, invariant-labeled actions leave it fixed,
  Enabling edges land in true states and Disabling edges in false ones.

A failed clause yields a replayable counterexample: the label path from
the initial state plus the offending pair and action.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .mapping import RefinementMapping, UNKNOWN_LABEL
from .report import FAIL, PASS, UNKNOWN, CertReport, Check, Counterexample
from .semantics import (
    AbstractState,
    FiniteDomain,
    FiniteState,
    abstract_state,
    do_program,
    enumerate_states,
    eval_formula,
    successor,
)
from .syntax import conj
from .theory import HighLIBAT, LowBAT
from .verify import (
    DECREMENTAL,
    DISABLING,
    ENABLING,
    FN_INVARIANT,
    INCREMENTAL,
    INVARIANT,
    ClassEntry,
    DomainBounds,
    _domain_of_size,
)


class BisimError(ValueError):
    """Raised when a transition system cannot be built as requested."""


@dataclass(frozen=True)
class TransitionSystem:
    """A finite labeled transition system with one designated initial state.

    Edges carry high-level action names; every state is reachable from the
    initial one by construction.  States are FiniteState (low systems) or
    AbstractState (high systems)."""

    states: tuple
    initial: int
    edges: tuple[tuple[int, str, int], ...]

    def edges_from(self, i: int) -> tuple[tuple[int, str, int], ...]:
        return tuple(e for e in self.edges if e[0] == i)

    def dump(self) -> str:
        """Line-oriented edge-list form: a state table, then one edge per
        line as "from<TAB>label<TAB>to"."""
        lines = [f"# state {i}: {s!r}" for i, s in enumerate(self.states)]
        lines.append(f"# initial {self.initial}")
        lines += [f"{i}\t{label}\t{j}" for i, label, j in self.edges]
        return "\n".join(lines) + "\n"


def build_low_ts(
    low: LowBAT,
    m: RefinementMapping,
    domain: FiniteDomain,
    initial: FiniteState,
) -> TransitionSystem:
    """The fragment of the low-level theory reachable from the initial state
    by executing refinements of high-level actions."""
    if not eval_formula(initial, {}, low.init):
        raise BisimError("initial state violates the initial knowledge base")
    for c in low.constraints:
        if not eval_formula(initial, {}, c):
            raise BisimError("initial state violates the state constraints")
    index: dict[FiniteState, int] = {initial: 0}
    states: list[FiniteState] = [initial]
    edges: list[tuple[int, str, int]] = []
    frontier = [0]
    while frontier:
        nxt: list[int] = []
        for i in frontier:
            s = states[i]
            for alpha in sorted(m.actions):
                for succ in sorted(do_program(low, s, m.actions[alpha])):
                    j = index.get(succ)
                    if j is None:
                        j = len(states)
                        index[succ] = j
                        states.append(succ)
                        nxt.append(j)
                    edges.append((i, alpha, j))
        frontier = nxt
    return TransitionSystem(tuple(states), 0, tuple(edges))


def build_high_ts(
    high: HighLIBAT,
    initial: AbstractState,
    fn_bounds: dict[str, int] | None = None,
    max_states: int = 100_000,
) -> TransitionSystem:
    """The reachable closure of the abstract initial state under
    precondition-respecting ground high-level actions.

    Integer fluents have no intrinsic bounds, so closure is budget-guarded:
    a fluent leaving ±fn_bounds[name] (when given), or the state count
    passing max_states, raises BisimError naming the runaway fluent instead
    of clamping.  Whether the initial state satisfies the initial knowledge
    base is the caller's concern: closures of inadmissible states are still
    well defined and useful for diagnosis."""
    index: dict[AbstractState, int] = {initial: 0}
    states: list[AbstractState] = [initial]
    edges: list[tuple[int, str, int]] = []
    frontier = [0]
    while frontier:
        nxt: list[int] = []
        for i in frontier:
            s = states[i]
            for alpha in sorted(high.actions):
                if not eval_formula(s, {}, high.precondition(alpha)):
                    continue
                succ = successor(high, s, alpha)
                if fn_bounds:
                    for name, bound in fn_bounds.items():
                        if abs(succ.value(name)) > bound:
                            raise BisimError(
                                f"integer fluent {name} left ±{bound} during "
                                f"closure (reached {succ.value(name)}); the "
                                "theory appears unbounded"
                            )
                j = index.get(succ)
                if j is None:
                    if len(states) >= max_states:
                        worst = max(
                            high.fns,
                            key=lambda f: abs(succ.value(f)),
                            default="?",
                        )
                        raise BisimError(
                            f"state budget ({max_states}) exhausted; integer "
                            f"fluent {worst} appears unbounded"
                        )
                    j = len(states)
                    index[succ] = j
                    states.append(succ)
                    nxt.append(j)
                edges.append((i, alpha, j))
        frontier = nxt
    return TransitionSystem(tuple(states), 0, tuple(edges))


@dataclass(frozen=True)
class BisimCounterexample:
    """Why the initial pair fell out of the greatest bisimulation.

    Replay: starting at both initial states, follow the labels in path;
    the resulting pair violates the named clause on the given action."""

    clause: str  # "atom" | "forth" | "back"
    path: tuple[str, ...]
    low_state: FiniteState
    high_state: AbstractState
    action: str = ""
    note: str = ""

    def describe(self) -> str:
        where = " -> ".join(self.path) if self.path else "(initial pair)"
        parts = [
            f"clause={self.clause}",
            f"path={where}",
            f"low={self.low_state!r}",
            f"high={self.high_state!r}",
        ]
        if self.action:
            parts.append(f"action={self.action}")
        if self.note:
            parts.append(self.note)
        return "; ".join(parts)


@dataclass(frozen=True)
class BisimVerdict:
    bisimilar: bool
    relation: frozenset[tuple[int, int]] | None = None
    counterexample: BisimCounterexample | None = None


def check_bisim(
    ts_low: TransitionSystem,
    ts_high: TransitionSystem,
    m: RefinementMapping,
) -> BisimVerdict:
    """Greatest bisimulation between the two systems by iterated refinement.

    The starting relation pairs exactly the states with equal abstract
    images; refinement removes pairs with an unmatched low move (forth) or
    high move (back) until a fixpoint.  The systems are bisimilar iff the
    initial pair survives.  On failure, the counterexample is extracted by
    descending from the initial pair along moves whose candidate partners
    are all refuted."""
    images = tuple(abstract_state(m, s) for s in ts_low.states)
    low_out: list[dict[str, list[int]]] = [dict() for _ in ts_low.states]
    for i, label, j in ts_low.edges:
        low_out[i].setdefault(label, []).append(j)
    high_out: list[dict[str, list[int]]] = [dict() for _ in ts_high.states]
    for i, label, j in ts_high.edges:
        high_out[i].setdefault(label, []).append(j)

    relation = {
        (l, h)
        for l in range(len(ts_low.states))
        for h in range(len(ts_high.states))
        if images[l] == ts_high.states[h]
    }
    changed = True
    while changed:
        changed = False
        for pair in sorted(relation):
            l, h = pair
            ok = True
            for label, targets in low_out[l].items():
                partners = high_out[h].get(label, [])
                for lt in targets:
                    if not any((lt, ht) in relation for ht in partners):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                for label, targets in high_out[h].items():
                    partners = low_out[l].get(label, [])
                    for ht in targets:
                        if not any((lt, ht) in relation for lt in partners):
                            ok = False
                            break
                    if not ok:
                        break
            if not ok:
                relation.discard(pair)
                changed = True

    init_pair = (ts_low.initial, ts_high.initial)
    if init_pair in relation:
        return BisimVerdict(True, frozenset(relation))

    def explain(
        l: int, h: int, path: tuple[str, ...], visited: frozenset
    ) -> BisimCounterexample:
        # A pair outside the greatest bisimulation violates one of the
        # clauses against it.  Prefer failures local to this pair (an atom
        # mismatch, or a move the other side cannot answer at all) before
        # descending into a move all of whose candidate partners are
        # themselves refuted.
        low_state, high_state = ts_low.states[l], ts_high.states[h]
        if images[l] != high_state:
            return BisimCounterexample(
                "atom", path, low_state, high_state,
                note=f"abstract image {images[l]!r} differs from the high state",
            )
        forth_descend: tuple[str, int, list[int]] | None = None
        for label in sorted(low_out[l]):
            partners = high_out[h].get(label, [])
            for lt in sorted(low_out[l][label]):
                if any((lt, ht) in relation for ht in partners):
                    continue
                if not partners:
                    return BisimCounterexample(
                        "forth", path, low_state, high_state, label,
                        "the low level can execute the refinement but the "
                        "high level cannot move",
                    )
                if forth_descend is None:
                    forth_descend = (label, lt, partners)
        back_descend: tuple[str, int, list[int]] | None = None
        for label in sorted(high_out[h]):
            partners = low_out[l].get(label, [])
            for ht in sorted(high_out[h][label]):
                if any((lt, ht) in relation for lt in partners):
                    continue
                if not partners:
                    return BisimCounterexample(
                        "back", path, low_state, high_state, label,
                        "the high level can move but the low level has no "
                        "refinement execution",
                    )
                if back_descend is None:
                    back_descend = (label, ht, partners)
        if forth_descend is not None:
            label, lt, partners = forth_descend
            for ht in sorted(partners):
                if (lt, ht) not in visited:
                    return explain(lt, ht, path + (label,), visited | {(lt, ht)})
            return BisimCounterexample(
                "forth", path, low_state, high_state, label,
                "every candidate high successor is already refuted",
            )
        if back_descend is not None:
            label, ht, partners = back_descend
            for lt in sorted(partners):
                if (lt, ht) not in visited:
                    return explain(lt, ht, path + (label,), visited | {(lt, ht)})
            return BisimCounterexample(
                "back", path, low_state, high_state, label,
                "every candidate low successor is already refuted",
            )
        return BisimCounterexample(
            "atom", path, low_state, high_state,
            note="pair refuted only through its successors",
        )

    cx = explain(*init_pair, (), frozenset({init_pair}))
    return BisimVerdict(False, None, cx)


# ---------------------------------------------------------------------------
# Edge laws


def edge_law_violations(
    ts_high: TransitionSystem,
    classifications: dict[tuple[str, str], ClassEntry],
) -> list[str]:
    """Classified-label laws checked on every edge of a high-level system:
    Incremental/Decremental change the fluent by exactly ±1, FnInvariant
    keeps it fixed; Enabling lands in a true state, Disabling in a false
    one, Invariant preserves the value.  Returns human-readable violations
    (empty = all laws hold)."""
    out: list[str] = []
    for i, label, j in ts_high.edges:
        src: AbstractState = ts_high.states[i]
        dst: AbstractState = ts_high.states[j]
        for (alpha, fluent), entry in sorted(classifications.items()):
            if alpha != label or entry.label == UNKNOWN_LABEL:
                continue
            where = f"edge {i} --{label}--> {j}"
            if entry.label == INCREMENTAL:
                if dst.value(fluent) != src.value(fluent) + 1:
                    out.append(
                        f"{where}: {fluent} moved {src.value(fluent)} -> "
                        f"{dst.value(fluent)}, expected +1"
                    )
            elif entry.label == DECREMENTAL:
                if dst.value(fluent) != src.value(fluent) - 1:
                    out.append(
                        f"{where}: {fluent} moved {src.value(fluent)} -> "
                        f"{dst.value(fluent)}, expected -1"
                    )
            elif entry.label == FN_INVARIANT:
                if dst.value(fluent) != src.value(fluent):
                    out.append(
                        f"{where}: {fluent} moved {src.value(fluent)} -> "
                        f"{dst.value(fluent)}, expected no change"
                    )
            elif entry.label == ENABLING:
                if not dst.truth(fluent):
                    out.append(f"{where}: {fluent} is false after an enabling action")
            elif entry.label == DISABLING:
                if dst.truth(fluent):
                    out.append(f"{where}: {fluent} is true after a disabling action")
            elif entry.label == INVARIANT:
                if dst.truth(fluent) != src.truth(fluent):
                    out.append(f"{where}: {fluent} changed under an invariant action")
    return out


# ---------------------------------------------------------------------------
# Certification


@dataclass(frozen=True)
class InstanceResult:
    """One certified (domain size, initial state) combination."""

    size: int
    index: int
    initial: FiniteState
    verdict: str
    low_states: int = 0
    high_states: int = 0
    related_total: bool = False
    counterexample: BisimCounterexample | None = None
    note: str = ""


def parallel_map(fn: Callable, items: Sequence, jobs: int | None = None) -> list:
    """Order-preserving map, optionally across a thread pool.  Results are
    aggregated in input order, so output never depends on jobs."""
    items = list(items)
    if not items:
        return []
    if not jobs or jobs <= 1 or len(items) == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _certify_one(
    low: LowBAT,
    m: RefinementMapping,
    high: HighLIBAT,
    domain: FiniteDomain,
    size: int,
    index: int,
    initial: FiniteState,
    fn_bounds: dict[str, int],
    classifications: dict[tuple[str, str], ClassEntry] | None,
) -> InstanceResult:
    ts_low = build_low_ts(low, m, domain, initial)
    image0 = abstract_state(m, initial)
    if not eval_formula(image0, {}, high.init):
        return InstanceResult(
            size, index, initial, FAIL,
            note="abstract image of the initial state violates the "
            f"high-level initial knowledge base: {image0!r}",
        )
    try:
        ts_high = build_high_ts(high, image0, fn_bounds)
    except BisimError as exc:
        return InstanceResult(size, index, initial, UNKNOWN, note=str(exc))
    verdict = check_bisim(ts_low, ts_high, m)
    if not verdict.bisimilar:
        return InstanceResult(
            size, index, initial, FAIL,
            low_states=len(ts_low.states), high_states=len(ts_high.states),
            counterexample=verdict.counterexample,
        )
    # executability equation: the high precondition at the abstract image
    # versus the refinement's executability, at every reachable low state
    for i, s in enumerate(ts_low.states):
        image = abstract_state(m, s)
        for alpha in sorted(m.actions):
            high_poss = eval_formula(image, {}, high.precondition(alpha))
            succs = sorted(do_program(low, s, m.actions[alpha]))
            if high_poss != bool(succs):
                return InstanceResult(
                    size, index, initial, FAIL,
                    low_states=len(ts_low.states),
                    high_states=len(ts_high.states),
                    note=f"state {s!r}: the high precondition of {alpha} is "
                    f"{str(high_poss).lower()} at image {image!r} but the "
                    f"refinement has {len(succs)} execution(s)",
                )
            # commutation equation: abstraction of each successor equals
            # the high-level successor of the abstraction
            if high_poss:
                expected = successor(high, image, alpha)
                for succ in succs:
                    got = abstract_state(m, succ)
                    if got != expected:
                        return InstanceResult(
                            size, index, initial, FAIL,
                            low_states=len(ts_low.states),
                            high_states=len(ts_high.states),
                            note=f"state {s!r}: executing the refinement of "
                            f"{alpha} abstracts to {got!r} but the high level "
                            f"steps to {expected!r}",
                        )
    note = ""
    related_total = False
    if verdict.relation is not None:
        lows = {l for l, _ in verdict.relation}
        highs = {h for _, h in verdict.relation}
        related_total = len(lows) == len(ts_low.states) and len(highs) == len(
            ts_high.states
        )
        if not related_total:
            note = "bisimilar, but some reachable state is unrelated"
    if classifications is not None:
        violations = edge_law_violations(ts_high, classifications)
        if violations:
            return InstanceResult(
                size, index, initial, FAIL,
                low_states=len(ts_low.states), high_states=len(ts_high.states),
                note="edge law violated: " + "; ".join(violations[:3]),
            )
    return InstanceResult(
        size, index, initial, PASS,
        low_states=len(ts_low.states), high_states=len(ts_high.states),
        related_total=related_total, note=note,
    )


def certify(
    low: LowBAT,
    m: RefinementMapping,
    high: HighLIBAT,
    bounds: DomainBounds,
    classifications: dict[tuple[str, str], ClassEntry] | None = None,
    jobs: int | None = None,
) -> CertReport:
    """Certify the abstraction per domain size: enumerate every admissible
    initial low state, build both transition systems, check bisimulation,
    the executability and commutation equations at every reachable state,
    and (when a classification table is given) the per-label edge laws.

    Sizes with no admissible initial state are reported unknown (vacuous),
    never as passes.  Instances run independently; aggregation order is
    fixed, so reports are identical for any jobs setting."""
    report = CertReport(
        f"bisimulation certification: {low.name} vs {high.name}"
    )
    for size in bounds.sizes():
        domain = _domain_of_size(low, size)
        initials = enumerate_states(
            low, domain,
            conj([low.init, *low.constraints]),
            budget=bounds.budget,
        )
        if not initials:
            report.add(Check(
                f"bisimulation(size={size})", UNKNOWN, size,
                detail="no admissible initial states (vacuous, not a pass)",
            ))
            continue
        fn_bounds = {
            name: size ** len(c.vars) for name, c in m.fns.items()
        }
        results = parallel_map(
            lambda pair: _certify_one(
                low, m, high, domain, size, pair[0], pair[1],
                fn_bounds, classifications,
            ),
            list(enumerate(initials)),
            jobs,
        )
        bad = next((r for r in results if r.verdict == FAIL), None)
        unknown = next((r for r in results if r.verdict == UNKNOWN), None)
        name = f"bisimulation(size={size})"
        if bad is not None:
            cx = None
            note = bad.note
            if bad.counterexample is not None:
                note = bad.counterexample.describe()
            report.add(Check(
                name, FAIL, size,
                Counterexample(size, bad.initial, note=note),
                detail=f"initial state {bad.index} of {len(results)} fails",
            ))
        elif unknown is not None:
            report.add(Check(
                name, UNKNOWN, size,
                detail=f"initial state {unknown.index}: {unknown.note}",
            ))
        else:
            low_total = sum(r.low_states for r in results)
            high_max = max(r.high_states for r in results)
            coverage = (
                "every reachable state related"
                if all(r.related_total for r in results)
                else "bisimilar (some unrelated reachable states)"
            )
            report.add(Check(
                name, PASS, size,
                detail=f"{len(results)} initial states; {low_total} low "
                f"states visited, largest high system {high_max}; "
                f"executability and commutation equations hold; {coverage}"
                + ("; edge laws hold" if classifications is not None else ""),
            ))
    return report
