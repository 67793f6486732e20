import json
import re

import pytest

from nambu_constraints import __version__
from nambu_constraints.cli import main
from nambu_constraints.harness import (
    DEFAULT_RTOL,
    WINTERNITZ_RTOL,
    checks_for,
    run_suite,
)
from nambu_constraints.systems import builtin
from nambu_constraints.systems.sysfile import data_text

KEYS = {"name", "kind", "samples", "max_residual", "tolerance", "pass", "provenance"}


@pytest.fixture(scope="module")
def ho_report():
    return run_suite([builtin("harmonic-oscillator")], seed=3, samples=30)


# ---------------------------------------------------------------------------
# reports


def test_report_is_byte_identical_for_same_seed(ho_report):
    again = run_suite([builtin("harmonic-oscillator")], seed=3, samples=30)
    assert ho_report.to_json() == again.to_json()
    assert ho_report.to_text() == again.to_text()


def test_report_schema(ho_report):
    body = json.loads(ho_report.to_json())
    assert body["meta"]["seed"] == 3
    assert body["meta"]["samples"] == 30
    assert body["meta"]["version"] == __version__
    for check in body["checks"]:
        assert KEYS <= set(check) <= KEYS | {"note"}
        assert check["provenance"] in {"published", "derived", "trivial"}
        assert check["pass"] == (check["max_residual"] <= check["tolerance"])


def test_checks_are_sorted_by_name(ho_report):
    names = [c.name for c in ho_report.checks]
    assert names == sorted(names)


def test_text_and_json_agree(ho_report):
    body = json.loads(ho_report.to_json())
    text = ho_report.to_text()
    for check in body["checks"]:
        line = next(l for l in text.splitlines() if f"  {check['name']}  " in l)
        assert line.startswith("PASS" if check["pass"] else "FAIL")
        shown = re.search(r"max_residual=(\S+)", line).group(1)
        assert shown == json.dumps(check["max_residual"])


def test_oscillator_passes_everything(ho_report):
    assert ho_report.passed
    names = {c.name for c in ho_report.checks}
    for sel in ("C1,C2,C3", "C1,C2,C4", "C1,C4,C5", "C3,C4,C5"):
        assert f"harmonic-oscillator/final/default/{sel}" in names


def test_winternitz_uses_looser_tolerance():
    specs = checks_for(builtin("winternitz-3"))
    finals = [s for s in specs if s.kind == "final"]
    assert finals and all(s.rtol == WINTERNITZ_RTOL for s in finals)
    assert all(s.rtol in (None, DEFAULT_RTOL) for s in checks_for(builtin("kepler-coulomb")))


def test_sphere_registers_both_sets():
    names = {s.name for s in checks_for(builtin("sphere-4"))}
    for label in ("default", "primed"):
        assert f"final/{label}/H,L12,L13,L14,L23,L24,L34" in names
    only_primed = {s.name for s in checks_for(builtin("sphere-4"), "primed")}
    assert not any("/default" in n for n in only_primed)


def test_tightened_tolerance_turns_dependent_check_red():
    report = run_suite([builtin("harmonic-oscillator")], seed=3, samples=10, rtol=1e-30, atol=0.0)
    assert not report.passed


def test_residual_recorded_when_expectation_is_wrong():
    # the published sign slip on the SW 4-bracket {f,C1,C2,C4}
    report = run_suite([builtin("smorodinsky-winternitz")], seed=1, samples=20)
    by_name = {c.name: c for c in report.checks}
    assert not by_name["smorodinsky-winternitz/final/default/C1,C2,C4"].passed
    assert by_name["smorodinsky-winternitz/final/default/C1,C2,C4/from-dF-dC3"].passed


# ---------------------------------------------------------------------------
# command line


def test_cli_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "sphere-4" in out and "s=4" in out


def test_cli_verify_exit_codes(capsys):
    assert main(["verify", "--system", "harmonic-oscillator", "--samples", "20"]) == 0
    assert main(["verify", "--system", "sphere-4", "--samples", "5"]) == 1
    assert main(["verify", "--system", "sphere-4", "--constraint-set", "default", "--samples", "5"]) == 0
    out = capsys.readouterr().out
    assert "FAIL  sphere-4/final/primed" in out


def test_cli_verify_json(capsys):
    assert main(["verify", "--system", "kepler-coulomb", "--samples", "10", "--format", "json",
                 "--param", "alpha=2"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["meta"]["params"]["kepler-coulomb"] == {"alpha": 2.0}


def test_cli_verify_system_file(tmp_path, capsys):
    path = tmp_path / "ho.sys"
    path.write_text(data_text("harmonic_oscillator.sys"))
    assert main(["verify", "--system", str(path), "--samples", "10"]) == 0
    assert "harmonic-oscillator/final/default/C1,C2,C4" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["verify", "--system", "pendulum"],
    ["verify", "--system", "harmonic-oscillator", "--param", "omega=3"],
    ["verify", "--system", "harmonic-oscillator", "--param", "k"],
    ["bracket", "--system", "harmonic-oscillator", "--args", "q1,C1"],
    ["bracket", "--system", "harmonic-oscillator", "--args", "q1,C1,C2,C9"],
    ["bracket", "--system", "harmonic-oscillator", "--args", "q1,C1,C2,C3", "--at", "q1=1"],
])
def test_cli_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_cli_bracket_dependent_selection(capsys):
    assert main(["bracket", "--system", "harmonic-oscillator", "--args", "f:q1,C1,C2,C3"]) == 0
    out = capsys.readouterr().out
    value = re.search(r"bracket \{.*\} = (\S+)", out).group(1)
    assert abs(float(value)) < 1e-12


def test_cli_bracket_of_coordinates(capsys):
    assert main(["bracket", "--system", "harmonic-oscillator", "--args", "q1,p1,q2,p2"]) == 0
    assert "= 1\n" in capsys.readouterr().out


def test_cli_bracket_reports_expectation_and_constant(capsys):
    argv = ["bracket", "--system", "kepler-coulomb", "--args", "f:p2,H,L1,L2,L3,A1",
            "--at", "q1=0.3,p1=-0.4,q2=1.1,p2=0.2,q3=-0.7,p3=0.5"]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "registered (default, published): A2*L3 - A3*L2" in out
    assert "normalization constant" in out
    residuals = [float(x) for x in re.findall(r"residual (\S+)", out)]
    assert residuals and max(residuals) < 1e-8


def test_cli_bracket_permuted_arguments_flip_sign(capsys):
    argv = ["bracket", "--system", "harmonic-oscillator", "--args", "f:q1,C2,C1,C4", "--seed", "5"]
    assert main(argv) == 0
    assert "registered (default, published): -(" in capsys.readouterr().out


def test_cli_reconstruct_shipped_tables(capsys):
    assert main(["reconstruct", "--system", "smorodinsky-winternitz"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("F = ")
    assert "compatible" in out and "reference F: max partial difference 0.000e+00" in out
    assert main(["reconstruct", "--system", "harmonic-oscillator"]) == 0
    assert "reference F2" in capsys.readouterr().out


def test_cli_reconstruct_gauge(capsys):
    assert main(["reconstruct", "--system", "harmonic-oscillator", "--gauge", "C2=1,C3=0"]) == 0
    assert main(["reconstruct", "--system", "harmonic-oscillator", "--gauge", "H=1"]) == 2


def test_cli_reconstruct_rejects_non_closed_table(tmp_path, capsys):
    path = tmp_path / "bad.table"
    path.write_text("target F2\npartial C2 = 2*C3\npartial C3 = 3*C2\n")
    assert main(["reconstruct", "--system", "harmonic-oscillator", "--table", str(path)]) == 1
    assert capsys.readouterr().out.startswith("incompatible:")


def test_cli_reconstruct_without_table(capsys):
    assert main(["reconstruct", "--system", "kepler-coulomb"]) == 2
