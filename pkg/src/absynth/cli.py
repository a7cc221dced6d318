"""Command-line interface: validate, check, synth, certify.

Exit codes are a stable contract:

* 0 — everything passed
* 1 — input error (missing file, unreadable flag, parse error)
* 2 — structural validation failures
* 3 — a property was refuted or synthesis was refused
* 4 — inconclusive (unknown verdicts, vacuous instance sets, exhausted
  budgets) without any outright refutation

All output is deterministic for fixed inputs and flags: no timestamps, no
environment-dependent content, and parallelism never reorders reports.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bisim import certify
from .parser import ParseError, load_project
from .printer import render_high
from .report import FAIL, PASS, UNKNOWN, CertReport
from .synthesis import SynthesisError, SynthesisInput, synthesize
from .verify import DomainBounds, VerifyError, check_restrictions, classify_all

EXIT_PASS = 0
EXIT_INPUT = 1
EXIT_VALIDATION = 2
EXIT_REFUTED = 3
EXIT_INCONCLUSIVE = 4

_VERDICT_EXIT = {PASS: EXIT_PASS, FAIL: EXIT_REFUTED, UNKNOWN: EXIT_INCONCLUSIVE}


class _Parser(argparse.ArgumentParser):
    """argparse with usage problems reported as input errors (exit 1)."""

    def error(self, message):  # noqa: A003 - argparse API
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _parse_bounds(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep or not lo.isdigit() or not hi.isdigit():
        raise ValueError(f"bounds must look like MIN..MAX, got {text!r}")
    return int(lo), int(hi)


def _default_jobs() -> int:
    raw = os.environ.get("ABSYNTH_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _emit(report: CertReport, args) -> None:
    text = report.json() if args.report == "json" else report.text()
    sys.stdout.write(text)
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")


def _bounds_from(args) -> DomainBounds:
    lo, hi = args.bounds
    return DomainBounds(
        min_objects=lo,
        max_objects=hi,
        template_depth=args.template_depth,
        budget=args.budget,
    )


def cmd_validate(args) -> int:
    worst = EXIT_PASS
    for path in args.paths:
        try:
            project = load_project(path)
        except OSError as exc:
            print(f"{path}: cannot read: {exc}")
            return EXIT_INPUT
        except ParseError as exc:
            print(f"{path}: parse error: {exc}")
            return EXIT_INPUT
        problems = project.validate()
        if problems:
            for p in problems:
                print(f"{path}: {p}")
            worst = max(worst, EXIT_VALIDATION)
        else:
            print(f"{path}: ok")
    return worst


def _load_project_or_exit(path: str):
    try:
        return load_project(path)
    except OSError as exc:
        print(f"{path}: cannot read: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)
    except ParseError as exc:
        print(f"{path}: parse error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _require(project, path: str, *, mapping: bool = True):
    if project.low is None:
        print(f"{path}: no low-level theory block", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)
    if mapping and project.mapping is None:
        print(f"{path}: no mapping block", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)
    problems = project.validate()
    if problems:
        for p in problems:
            print(f"{path}: {p}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def cmd_check(args) -> int:
    project = _load_project_or_exit(args.project)
    _require(project, args.project)
    try:
        bounds = _bounds_from(args)
        result = check_restrictions(project.low, project.mapping, bounds)
    except VerifyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(result.report, args)
    return _VERDICT_EXIT[result.report.verdict]


def cmd_synth(args) -> int:
    project = _load_project_or_exit(args.project)
    _require(project, args.project)
    low, m = project.low, project.mapping
    try:
        bounds = _bounds_from(args)
        if args.assume_checked:
            report = None
            classifications = classify_all(low, m, bounds)
        else:
            result = check_restrictions(low, m, bounds)
            report = result.report
            if report.verdict != PASS:
                _emit(report, args)
                return _VERDICT_EXIT[report.verdict]
            classifications = result.classifications
        high, provenance = synthesize(
            SynthesisInput(low, m, classifications, report),
            simplify=args.simplify,
        )
    except (VerifyError, SynthesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUTED
    text = render_high(high)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        sidecar = args.out + ".provenance.json"
        Path(sidecar).write_text(
            json.dumps(provenance, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        print(f"wrote {args.out} and {sidecar}")
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def cmd_certify(args) -> int:
    project = _load_project_or_exit(args.project)
    _require(project, args.project)
    low, m = project.low, project.mapping
    try:
        bounds = _bounds_from(args)
        high = project.high
        if high is None:
            if args.assume_checked:
                classifications = classify_all(low, m, bounds)
            else:
                result = check_restrictions(low, m, bounds)
                if result.report.verdict != PASS:
                    _emit(result.report, args)
                    return _VERDICT_EXIT[result.report.verdict]
                classifications = result.classifications
            high, _ = synthesize(
                SynthesisInput(low, m, classifications, None),
                simplify=args.simplify,
            )
        else:
            try:
                classifications = classify_all(low, m, bounds)
            except VerifyError:
                classifications = None  # edge laws skipped, bisim still runs
        report = certify(
            low, m, high, bounds,
            classifications=classifications, jobs=args.jobs,
        )
    except (VerifyError, SynthesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUTED
    _emit(report, args)
    return _VERDICT_EXIT[report.verdict]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("project", help="project file (theories + mapping)")
    p.add_argument(
        "--bounds", type=_parse_bounds, default=(2, 5), metavar="MIN..MAX",
        help="total domain sizes to examine, constants included (default 2..5)",
    )
    p.add_argument(
        "--template-depth", type=int, default=2, metavar="K",
        help="projection-formula nesting depth (default 2)",
    )
    p.add_argument(
        "--budget", type=int, default=5_000_000, metavar="N",
        help="node budget per state enumeration (default 5000000)",
    )
    p.add_argument(
        "--report", choices=("text", "json"), default="text",
        help="report format on stdout (default text)",
    )
    p.add_argument(
        "--out", metavar="PATH", default=None,
        help="also write the output to this file",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="absynth",
        description="verify refinement mappings between action theories and "
        "synthesize the high-level theory they induce",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "validate", help="parse and structurally validate project files"
    )
    p.add_argument("paths", nargs="+", help="project files")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("check", help="run the mapping restriction checks")
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser(
        "synth", help="synthesize the high-level theory from the mapping"
    )
    _add_common(p)
    p.add_argument(
        "--assume-checked", action="store_true",
        help="skip the restriction checks (trust a previous run)",
    )
    p.add_argument(
        "--simplify", dest="simplify", action="store_true", default=True,
        help="prune redundant arithmetic conjuncts (default)",
    )
    p.add_argument(
        "--no-simplify", dest="simplify", action="store_false",
        help="keep the literal translation output",
    )
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser(
        "certify",
        help="certify bisimulation between the theories on finite instances",
    )
    _add_common(p)
    p.add_argument(
        "--assume-checked", action="store_true",
        help="skip the restriction checks before synthesizing",
    )
    p.add_argument(
        "--simplify", dest="simplify", action="store_true", default=True,
        help=argparse.SUPPRESS,
    )
    p.add_argument(
        "--no-simplify", dest="simplify", action="store_false",
        help=argparse.SUPPRESS,
    )
    p.add_argument(
        "--jobs", type=int, default=_default_jobs(), metavar="N",
        help="instances verified in parallel (default $ABSYNTH_JOBS or 1)",
    )
    p.set_defaults(fn=cmd_certify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
