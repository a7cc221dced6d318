"""Command-line interface: exit codes, output formats, and determinism.

The CLI promises a stable exit-code contract (0 pass, 1 input error,
2 validation failure, 3 refuted, 4 inconclusive) and byte-deterministic
output for fixed inputs and flags.  Every test drives ``absynth.cli.main``
in process so stdout/stderr can be captured exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from absynth import fixture_path, load_fixture
from absynth.cli import (
    EXIT_INCONCLUSIVE,
    EXIT_INPUT,
    EXIT_PASS,
    EXIT_REFUTED,
    EXIT_VALIDATION,
    _default_jobs,
    _parse_bounds,
    main,
)
from absynth.printer import render_high

FIXTURE = str(fixture_path("blocks_world"))
BOARD = str(fixture_path("switchboard"))


def run(*argv: str) -> int:
    """Invoke the CLI, normalizing argparse SystemExit into a return code."""
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    return code if isinstance(code, int) else 0


@pytest.fixture(scope="module")
def fixture_text() -> str:
    return Path(FIXTURE).read_text(encoding="utf-8")


def write_project(tmp_path: Path, text: str, name: str = "project.dsl") -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# --- validate ---------------------------------------------------------------


def test_validate_bundled_projects(capsys):
    assert run("validate", FIXTURE, BOARD) == EXIT_PASS
    out = capsys.readouterr().out.splitlines()
    assert out == [f"{FIXTURE}: ok", f"{BOARD}: ok"]


def test_validate_missing_file(tmp_path, capsys):
    missing = str(tmp_path / "nope.dsl")
    assert run("validate", missing) == EXIT_INPUT
    assert "cannot read" in capsys.readouterr().out


def test_validate_parse_error(tmp_path, capsys):
    path = write_project(tmp_path, "bat low oops {\n  pred p(;\n")
    assert run("validate", path) == EXIT_INPUT
    out = capsys.readouterr().out
    assert out.startswith(f"{path}: parse error:")


def test_validate_structural_problem(tmp_path, capsys):
    path = write_project(
        tmp_path,
        """
        bat low tiny {
          pred p(x);
          pred q(x);
          action a(x) poss: !p(x);
          ssa p(x) { add a(x); }
          init: !(exists x. p(x));
        }
        """,
    )
    assert run("validate", path) == EXIT_VALIDATION
    out = capsys.readouterr().out
    assert f"{path}: low: fluent q has no successor-state axiom" in out


def test_validate_aggregates_worst_and_keeps_going(tmp_path, capsys):
    bad = write_project(
        tmp_path,
        "bat low t { pred p(x); action a(x) poss: !p(x);"
        " init: !(exists x. p(x)); }",
        name="bad.dsl",
    )
    assert run("validate", bad, FIXTURE) == EXIT_VALIDATION
    out = capsys.readouterr().out
    # the clean project after the broken one is still reported
    assert f"{FIXTURE}: ok" in out
    assert "successor-state axiom" in out


# --- argument handling ------------------------------------------------------


def test_parse_bounds_unit():
    assert _parse_bounds("2..5") == (2, 5)
    assert _parse_bounds("10..10") == (10, 10)
    for bad in ("2..x", "25", "2..", "..4", "-1..3", "a..b"):
        with pytest.raises(ValueError):
            _parse_bounds(bad)


def test_bad_bounds_syntax_is_input_error(capsys):
    assert run("check", FIXTURE, "--bounds", "2..x") == EXIT_INPUT
    assert "invalid" in capsys.readouterr().err


def test_reversed_bounds_is_input_error(capsys):
    assert run("check", FIXTURE, "--bounds", "5..2") == EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_and_flag(capsys):
    assert run("frobnicate", FIXTURE) == EXIT_INPUT
    assert run("check", FIXTURE, "--wat") == EXIT_INPUT
    assert run() == EXIT_INPUT  # a subcommand is required
    capsys.readouterr()


def test_default_jobs_env(monkeypatch):
    monkeypatch.delenv("ABSYNTH_JOBS", raising=False)
    assert _default_jobs() == 1
    monkeypatch.setenv("ABSYNTH_JOBS", "7")
    assert _default_jobs() == 7
    monkeypatch.setenv("ABSYNTH_JOBS", "0")
    assert _default_jobs() == 1
    monkeypatch.setenv("ABSYNTH_JOBS", "abc")
    assert _default_jobs() == 1


def test_missing_blocks_are_validation_errors(tmp_path, fixture_text, capsys):
    low_only = write_project(
        tmp_path, fixture_text.split("bat high")[0], name="low_only.dsl"
    )
    assert run("check", low_only) == EXIT_VALIDATION
    assert "no mapping block" in capsys.readouterr().err

    high_only = write_project(
        tmp_path,
        "bat high" + fixture_text.split("bat high", 1)[1].split("mapping")[0],
        name="high_only.dsl",
    )
    assert run("check", high_only) == EXIT_VALIDATION
    assert "no low-level theory block" in capsys.readouterr().err


def test_check_rejects_unreadable_project(tmp_path, capsys):
    assert run("check", str(tmp_path / "ghost.dsl")) == EXIT_INPUT
    assert "cannot read" in capsys.readouterr().err


# --- check ------------------------------------------------------------------


def test_check_fixture_passes(capsys):
    assert run("check", FIXTURE, "--bounds", "2..3") == EXIT_PASS
    out = capsys.readouterr().out
    assert "overall: PASS" in out
    for row in (
        "flat",
        "complete",
        "consistent",
        "syntax-irrelevant",
        "simply-forgettable",
        "prop-exists-definable",
        "executability-preserving",
    ):
        assert row in out


def test_check_json_report_and_out_file(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code = run(
        "check", FIXTURE, "--bounds", "2..3",
        "--report", "json", "--out", str(out_path),
    )
    assert code == EXIT_PASS
    stdout = capsys.readouterr().out
    # --out duplicates stdout byte for byte
    assert out_path.read_text(encoding="utf-8") == stdout
    payload = json.loads(stdout)
    assert payload["overall"] == "pass"
    names = [c["name"] for c in payload["checks"]]
    assert names[0] == "flat"
    assert len(names) == 7


def test_check_refuted_witness(tmp_path, fixture_text, capsys):
    flipped = fixture_text.replace(
        "witness Putdown := exists x. holding(x);",
        "witness Putdown := !(exists x. holding(x));",
    )
    assert flipped != fixture_text
    path = write_project(tmp_path, flipped)
    assert run("check", path, "--bounds", "2..3") == EXIT_REFUTED
    out = capsys.readouterr().out
    assert "overall: FAIL" in out
    assert "prop-exists-definable" in out


def test_check_without_witnesses_is_inconclusive(tmp_path, fixture_text, capsys):
    stripped = "\n".join(
        line
        for line in fixture_text.splitlines()
        if not line.strip().startswith("witness")
    )
    path = write_project(tmp_path, stripped)
    assert run("check", path, "--bounds", "2..3") == EXIT_INCONCLUSIVE
    assert "overall: UNKNOWN" in capsys.readouterr().out


# --- synth ------------------------------------------------------------------


def test_synth_assume_checked_matches_declared_theory(capsys):
    code = run("synth", FIXTURE, "--assume-checked", "--bounds", "2..3")
    assert code == EXIT_PASS
    assert capsys.readouterr().out == render_high(load_fixture().high)


def test_synth_full_check_path_matches_assume_checked(capsys):
    assert run("synth", FIXTURE, "--bounds", "2..3") == EXIT_PASS
    out = capsys.readouterr().out
    # on a passing check only the synthesized theory is printed
    assert out == render_high(load_fixture().high)
    assert out.startswith("bat high")


def test_synth_out_writes_theory_and_provenance_sidecar(tmp_path, capsys):
    out_path = tmp_path / "counters.dsl"
    sidecar = tmp_path / "counters.dsl.provenance.json"
    code = run(
        "synth", FIXTURE, "--assume-checked", "--bounds", "2..3",
        "--out", str(out_path),
    )
    assert code == EXIT_PASS
    assert capsys.readouterr().out == f"wrote {out_path} and {sidecar}\n"
    assert out_path.read_text(encoding="utf-8") == render_high(load_fixture().high)
    provenance = json.loads(sidecar.read_text(encoding="utf-8"))
    assert provenance["source"] == "blocks"
    assert provenance["mapping"] == "counters"
    assert provenance["restrictions"] == "assumed"
    assert "PickAboveC:Num" in provenance["classifications"]

    # the sidecar is byte-stable across runs
    first = sidecar.read_bytes()
    run(
        "synth", FIXTURE, "--assume-checked", "--bounds", "2..3",
        "--out", str(out_path),
    )
    capsys.readouterr()
    assert sidecar.read_bytes() == first


def test_synth_no_simplify_keeps_redundant_conjunct(capsys):
    code = run(
        "synth", FIXTURE, "--assume-checked", "--no-simplify", "--bounds", "2..3"
    )
    assert code == EXIT_PASS
    out = capsys.readouterr().out
    assert "Num >= 0" in out


def test_synth_refuted_mapping_emits_report(tmp_path, fixture_text, capsys):
    flipped = fixture_text.replace(
        "witness Putdown := exists x. holding(x);",
        "witness Putdown := !(exists x. holding(x));",
    )
    path = write_project(tmp_path, flipped)
    assert run("synth", path, "--bounds", "2..3") == EXIT_REFUTED
    out = capsys.readouterr().out
    assert "overall: FAIL" in out
    assert "bat high" not in out  # no theory is printed on refusal


# --- certify ----------------------------------------------------------------


def test_certify_fixture_passes(capsys):
    assert run("certify", FIXTURE, "--bounds", "3..3") == EXIT_PASS
    out = capsys.readouterr().out
    assert "bisimulation(size=3)" in out
    assert "overall: PASS" in out


def test_certify_json_is_deterministic_across_jobs(monkeypatch, capsys):
    outputs = []
    for jobs in ("1", "4"):
        assert (
            run(
                "certify", FIXTURE, "--bounds", "3..3",
                "--report", "json", "--jobs", jobs,
            )
            == EXIT_PASS
        )
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    payload = json.loads(outputs[0])
    assert payload["overall"] == "pass"

    # the same applies when the job count comes from the environment
    monkeypatch.setenv("ABSYNTH_JOBS", "4")
    assert (
        run("certify", FIXTURE, "--bounds", "3..3", "--report", "json")
        == EXIT_PASS
    )
    assert capsys.readouterr().out == outputs[0]


def test_certify_vacuous_bounds_inconclusive(capsys):
    assert run("certify", FIXTURE, "--bounds", "1..1") == EXIT_INCONCLUSIVE
    out = capsys.readouterr().out
    assert "overall: UNKNOWN" in out
    assert "vacuous" in out


def test_certify_refutes_mutated_precondition(tmp_path, fixture_text, capsys):
    mutated = fixture_text.replace(
        "action Putdown poss: Holding;",
        "action Putdown poss: !Holding;",
    )
    assert mutated != fixture_text
    path = write_project(tmp_path, mutated)
    assert run("certify", path, "--bounds", "3..3") == EXIT_REFUTED
    out = capsys.readouterr().out
    assert "overall: FAIL" in out
    assert "initial state" in out


def test_certify_accepts_assume_checked_flag(capsys):
    code = run("certify", FIXTURE, "--bounds", "3..3", "--assume-checked")
    assert code == EXIT_PASS
    assert "overall: PASS" in capsys.readouterr().out


def test_mapping_requires_both_theories_declared(tmp_path, fixture_text, capsys):
    # a mapping block without the high-level theory is a parse error, so a
    # project file can never reach certification with a mapping but no theory
    no_high = (
        fixture_text.split("bat high")[0]
        + "mapping"
        + fixture_text.split("bat high", 1)[1].split("mapping", 1)[1]
    )
    path = write_project(tmp_path, no_high)
    assert run("validate", path) == EXIT_INPUT
    assert "declared first" in capsys.readouterr().out
