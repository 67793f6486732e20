"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.
Each criterion is evaluated from a single seeded run of every registered
check at 100 sampled points.
"""
import sys
import time
from functools import lru_cache

import pytest
import sympy

from nambu_constraints import expr as ex
from nambu_constraints.constraints import reconstruct_constraint
from nambu_constraints.harness import all_systems, run_suite
from nambu_constraints.systems import builtin
from nambu_constraints.systems.sysfile import shipped_table

SEED = 42
SAMPLES = 100
WALL_CLOCK_LIMIT = 60.0


@lru_cache(maxsize=None)
def suite():
    start = time.perf_counter()
    report = run_suite(all_systems(), seed=SEED, samples=SAMPLES, structural=True)
    elapsed = time.perf_counter() - start
    return {r.name: r for r in report.checks}, elapsed


def _results(names):
    results, _ = suite()
    missing = [n for n in names if n not in results]
    assert not missing, f"checks not registered: {missing}"
    return [results[n] for n in names]


def _select(prefixes, exclude=()):
    results, _ = suite()
    return [r for name, r in sorted(results.items())
            if name.startswith(prefixes) and not any(x in name for x in exclude)]


def _sympy_oracle_for_reconstruction():
    """Expand (dF/dC_k - table partial) in sympy for the rebuilt SW constraint
    and for the shipped one; every difference must be identically zero."""
    table = shipped_table("smorodinsky-winternitz")
    rebuilt = reconstruct_constraint(table.partials, table.gauge)
    shipped = builtin("smorodinsky-winternitz").default_set.body("F")
    worst = 0
    for target in (rebuilt, shipped):
        f = sympy.sympify(ex.to_string(target).replace("^", "**"))
        for name, rhs in table.partials.items():
            want = sympy.sympify(ex.to_string(rhs).replace("^", "**"))
            diff = sympy.expand(sympy.diff(f, sympy.Symbol(name)) - want)
            worst = max(worst, 0 if diff == 0 else 1)
    return worst


CRITERIA = {
    1: ("harmonic oscillator brackets and family variants", lambda: _select(
        ("harmonic-oscillator/pb-table/", "harmonic-oscillator/final/default/",
         "harmonic-oscillator/hamiltonian-free/final/", "harmonic-oscillator/extended-c6/final/",
         "harmonic-oscillator/extended-c7/final/", "harmonic-oscillator/dependent-vanishing/"),
        exclude=("every-selection",))),
    2: ("Smorodinsky-Winternitz PB table and 4-brackets", lambda: _results([
        "smorodinsky-winternitz/pb-table/C2,C3",
        "smorodinsky-winternitz/pb-table/C2,C4",
        "smorodinsky-winternitz/pb-table/C3,C4",
        "smorodinsky-winternitz/pb-table/C2,C3/casimir-gradient",
        "smorodinsky-winternitz/pb-table/C2,C4/casimir-gradient",
        "smorodinsky-winternitz/pb-table/C3,C4/casimir-gradient",
        "smorodinsky-winternitz/final/default/C1,C2,C4",
        "smorodinsky-winternitz/final/default/C2,C3,C4",
    ])),
    3: ("Kepler-Coulomb constraints, 6-brackets, decomposition", lambda: _results([
        "kepler-coulomb/constraint-zero/default",
        "kepler-coulomb/final/default/H,L1,L2,L3,A1",
        "kepler-coulomb/final/default/L1,L2,L3,A1,A2",
        "kepler-coulomb/final/default/H,L1,L2,A2,A3",
        "kepler-coulomb/decomposition/L1,L2,L3,A1",
    ])),
    4: ("Winternitz n=3 complex brackets and T-algebra", lambda: _results([
        "winternitz-3/final/default/H,T11,T22,T12,T13",
        "winternitz-3/final/default/T11,T22,T33,T12,T13",
    ]) + _select(("winternitz-3/pb-table/",))),
    5: ("sphere n=4 8-brackets, default and primed sets", lambda: _results([
        "sphere-4/final/default/H,P1,P2,P3,P4,L12,L13",
        "sphere-4/final/default/P1,P2,P3,P4,L12,L13,L24",
        "sphere-4/final/default/H,L12,L13,L14,L23,L24,L34",
        "sphere-4/final/primed/H,P1,P2,P3,P4,L12,L13",
        "sphere-4/final/primed/P1,P2,P3,P4,L12,L13,L24",
        "sphere-4/final/primed/H,L12,L13,L14,L23,L24,L34",
    ])),
    6: ("structural properties", lambda: _results([
        "harmonic-oscillator/homogeneous/default/coefficients",
        "harmonic-oscillator/homogeneous/default/brackets",
        "structural/antisymmetry/random-polynomials-n2",
        "structural/leibniz/random-polynomials-n2",
        "structural/fi-n3/random-cubics",
        "structural/decomposition/random-polynomials-n2",
        "structural/decomposition/random-polynomials-n3",
    ])),
    7: ("reconstruction from bracket tables", lambda: _results([
        "smorodinsky-winternitz/reconstruction/F",
        "harmonic-oscillator/reconstruction/F2",
        "harmonic-oscillator/reconstruction/corrupted-table-rejected",
        "smorodinsky-winternitz/reconstruction/corrupted-table-rejected",
    ])),
}

# Reported next to a criterion without affecting its verdict.
NOTES = {
    2: ["smorodinsky-winternitz/final/default/C1,C2,C4/from-dF-dC3"],
    5: ["sphere-4/final/default/every-selection", "sphere-4/final/primed/every-selection"],
}


def evaluate(number):
    title, select = CRITERIA[number]
    results = select()
    assert results, f"criterion {number} selected no checks"
    lines, ok = [], True
    for r in results:
        good = r.passed and (r.kind == "reconstruction" or r.samples >= SAMPLES)
        ok &= good
        lines.append(f"    {'pass' if good else 'FAIL'}  {r.name}  residual={r.max_residual:.3g}  tol={r.tolerance:g}")
    if number == 7:
        oracle = _sympy_oracle_for_reconstruction()
        ok &= oracle == 0
        lines.append(f"    {'pass' if oracle == 0 else 'FAIL'}  sympy expansion of dF/dC_k minus table partials")
    for name in NOTES.get(number, ()):
        (r,) = _results([name])
        lines.append(f"    note  {r.name}  {'pass' if r.passed else 'fail'}  residual={r.max_residual:.3g}")
    header = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}"
    return ok, [header] + lines


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    ok, lines = evaluate(number)
    acceptance_log.extend(lines)
    assert ok, "\n".join(lines)


def test_suite_wall_clock(acceptance_log):
    _, elapsed = suite()
    ok = elapsed < WALL_CLOCK_LIMIT
    acceptance_log.extend([f"{'PASS' if ok else 'FAIL'}  full check suite ran in {elapsed:.1f}s (limit {WALL_CLOCK_LIMIT:.0f}s)"])
    assert ok


def test_suite_is_seed_deterministic(acceptance_log):
    a = run_suite([builtin("kepler-coulomb")], seed=SEED, samples=SAMPLES).to_json()
    b = run_suite([builtin("kepler-coulomb")], seed=SEED, samples=SAMPLES).to_json()
    acceptance_log.extend([f"{'PASS' if a == b else 'FAIL'}  identical reports for identical seeds"])
    assert a == b


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        ok, lines = evaluate(n)
        print("\n".join(lines))
        failed += not ok
    sys.exit(1 if failed else 0)
