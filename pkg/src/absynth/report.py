"""Deterministic pass/fail reporting shared by the verifiers.

A report is a titled list of named checks.  Every failing check carries a
counterexample that the finite-structure evaluator can replay.  Rendering is
fully deterministic: no timestamps, no environment-dependent content, stable
key order in the JSON form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


PASS = "pass"
FAIL = "fail"
UNKNOWN = "unknown"

_ORDER = {PASS: 0, UNKNOWN: 1, FAIL: 2}


@dataclass(frozen=True)
class Counterexample:
    """A concrete refutation: a state, optionally an action instance."""

    size: int
    state: object = None  # FiniteState | AbstractState | pair of states
    action: str = ""
    args: tuple[str, ...] = ()
    note: str = ""

    def describe(self) -> str:
        parts = [f"size={self.size}"]
        if self.state is not None:
            parts.append(f"state={self.state!r}")
        if self.action:
            ground = f"{self.action}({', '.join(self.args)})"
            parts.append(f"action={ground}")
        if self.note:
            parts.append(self.note)
        return "; ".join(parts)


@dataclass(frozen=True)
class Check:
    """One named verdict: pass/fail/unknown, with the bound it ran at.

    bound is the largest domain size examined; 0 marks a purely syntactic
    check.  Verdicts are "pass up to the bound", never proofs.
    """

    name: str
    verdict: str
    bound: int = 0
    counterexample: Counterexample | None = None
    detail: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in _ORDER:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == FAIL and self.counterexample is None and not self.detail:
            raise ValueError(f"fail verdict for {self.name} needs evidence")


@dataclass
class CertReport:
    """An ordered collection of checks with an aggregate verdict."""

    title: str
    checks: list[Check] = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    @property
    def verdict(self) -> str:
        worst = PASS
        for c in self.checks:
            if _ORDER[c.verdict] > _ORDER[worst]:
                worst = c.verdict
        return worst

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.verdict == FAIL]

    def unknowns(self) -> list[Check]:
        return [c for c in self.checks if c.verdict == UNKNOWN]

    def text(self) -> str:
        lines = [self.title, "=" * len(self.title)]
        width = max((len(c.name) for c in self.checks), default=0)
        for c in self.checks:
            bound = f"up to {c.bound} objects" if c.bound else "syntactic"
            line = f"{c.name.ljust(width)}  {c.verdict.upper():7s} [{bound}]"
            if c.detail:
                line += f" {c.detail}"
            lines.append(line)
            if c.counterexample is not None:
                lines.append(f"{' ' * width}  counterexample: "
                             f"{c.counterexample.describe()}")
        lines.append(f"overall: {self.verdict.upper()}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        doc: dict = {"title": self.title, "overall": self.verdict, "checks": []}
        for c in self.checks:
            entry: dict = {
                "name": c.name,
                "verdict": c.verdict,
                "bound": c.bound,
            }
            if c.detail:
                entry["detail"] = c.detail
            if c.counterexample is not None:
                cx = c.counterexample
                entry["counterexample"] = {
                    "size": cx.size,
                    "state": repr(cx.state) if cx.state is not None else "",
                    "action": cx.action,
                    "args": list(cx.args),
                    "note": cx.note,
                }
            doc["checks"].append(entry)
        return doc

    def json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"
