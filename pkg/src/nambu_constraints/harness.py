"""Verification suites: registered bracket identities per system, run at
seeded random phase points and collected into a deterministic report."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from . import expr as ex
from .brackets import (
    PhaseSpace,
    cyclic_expansion,
    decomposed_bracket,
    jacobian_expr,
    nambu,
    permutation_sign,
)
from .constraints import (
    IncompatiblePartials,
    final_sides_coordinates,
    homogeneous_terms,
    levi_civita_coefficient,
    partial_mismatch,
    reconstruct_constraint,
    scaled_residual,
    verify_corollary,
)
from . import polynomial as poly
from .systems import catalog
from .systems.model import MotionSystem, SamplingExhausted, batch_binding, sample
from .systems.sysfile import shipped_table

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
WINTERNITZ_RTOL = 1e-7
FI_RTOL = 1e-7
STRUCTURAL = "structural"

# provenance tags for expected values
PUBLISHED = "published"
DERIVED = "derived"
TRIVIAL = "trivial"


@dataclass(frozen=True)
class CheckSpec:
    name: str
    kind: str
    run: Callable[["Context"], object]
    provenance: str = DERIVED
    expected: str | None = None
    rtol: float | None = None
    constraint_set: str | None = None
    sampled: bool = True


@dataclass
class Context:
    system: MotionSystem | None
    seed: int
    samples: int
    rtol: float
    atol: float
    binding: dict | None = None
    _points: dict = field(default_factory=dict)

    def point(self):
        if "family" not in self._points:
            self._points["family"] = self.system.family.at(self.binding)
        return self._points["family"]

    def cset(self, label):
        return self.system.constraint_set(label)

    def indices(self, names: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.system.family.index(n) for n in names)

    def evaluator(self, source: str | ex.Expr):
        fn = ex.compile_expr(ex.as_expr(source))
        merged = {**self.binding, **self.point().c_values}
        return np.asarray(fn(merged))

    def rng(self, salt: str) -> np.random.Generator:
        # stable per-check stream, independent of check order
        digest = sum((i + 1) * ord(c) for i, c in enumerate(salt))
        return np.random.default_rng([self.seed, digest])


@dataclass(frozen=True)
class CheckResult:
    name: str
    kind: str
    samples: int
    max_residual: float
    tolerance: float
    passed: bool
    provenance: str
    note: str | None = None

    def as_dict(self) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "provenance": self.provenance,
        }
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class VerificationReport:
    meta: dict
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        body = {"meta": self.meta, "checks": [c.as_dict() for c in self.checks]}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"seed {self.meta['seed']}  samples {self.meta['samples']}  "
                 f"rtol {_num(self.meta['rtol'])}  atol {_num(self.meta['atol'])}  "
                 f"version {self.meta['version']}"]
        for name, params in self.meta["params"].items():
            if params:
                shown = ", ".join(f"{k}={_num(v)}" for k, v in params.items())
                lines.append(f"params {name}: {shown}")
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            line = (f"{status}  {c.name}  [{c.kind}]  samples={c.samples}  "
                    f"max_residual={_num(c.max_residual)}  tolerance={_num(c.tolerance)}  "
                    f"provenance={c.provenance}")
            if c.note:
                line += f"  note: {c.note}"
            lines.append(line)
        failed = sum(not c.passed for c in self.checks)
        lines.append(f"{len(self.checks) - failed}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    # the same repr appears in the JSON output
    return json.dumps(x)


def _round(x: float) -> float:
    if not np.isfinite(x):
        return float("inf")
    return float(f"{x:.6e}")


# ---------------------------------------------------------------------------
# residual helpers


def _max(values) -> float:
    arr = np.abs(np.asarray(values, dtype=complex))
    if arr.size == 0:
        return 0.0
    if not np.all(np.isfinite(arr)):
        return float("inf")
    return float(np.max(arr))


def _worst(*arrays):
    return max((_max(a) for a in arrays), default=0.0)


def _hadamard_scaled(det, matrix) -> np.ndarray:
    """|det| relative to the Hadamard bound of the matrix."""
    bound = np.prod(np.linalg.norm(matrix, axis=-1), axis=-1)
    return np.abs(det) / np.maximum(1.0, bound)


# ---------------------------------------------------------------------------
# check builders


def final_check(label: str, names: Sequence[str], expected: str, provenance: str = PUBLISHED,
                rtol: float | None = None, tag: str | None = None) -> CheckSpec:
    """{f, C_names} against expected * df/dt for f over every coordinate,
    and the computed normalization constant against the expected form."""
    def run(ctx: Context):
        fam, cs = ctx.system.family, ctx.cset(label)
        idx = ctx.indices(names)
        point = ctx.point()
        lhs, rhs = final_sides_coordinates(fam, cs, idx, point)
        want = ctx.evaluator(expected)
        flow = np.moveaxis(point.hamiltonian_flow(), -1, 0)
        coeff = levi_civita_coefficient(fam, cs, idx, point)
        return _worst(scaled_residual(lhs, rhs, ctx.atol),
                      scaled_residual(lhs, want * flow, ctx.atol),
                      scaled_residual(coeff, want, ctx.atol))

    name = f"final/{label}/{tag or ','.join(names)}"
    return CheckSpec(name, "final", run, provenance, expected, rtol, label)


def every_selection_check(label: str, rtol: float | None = None) -> CheckSpec:
    def run(ctx: Context):
        fam, cs = ctx.system.family, ctx.cset(label)
        point = ctx.point()
        worst = 0.0
        for sel in itertools.combinations(range(fam.m), 2 * fam.phase_space.n - 1):
            lhs, rhs = final_sides_coordinates(fam, cs, sel, point)
            worst = max(worst, _max(scaled_residual(lhs, rhs, ctx.atol)))
        return worst

    return CheckSpec(f"final/{label}/every-selection", "final", run, DERIVED, None, rtol, label)


def pb_check(a: str, b: str, expected: str | ex.Expr, provenance: str = PUBLISHED,
             rtol: float | None = None) -> CheckSpec:
    def run(ctx: Context):
        i, j = ctx.indices((a, b))
        pb = ctx.point().pb_matrix((i, j))[..., 0, 1]
        return _max(scaled_residual(pb, ctx.evaluator(expected), ctx.atol))

    shown = expected if isinstance(expected, str) else ex.to_string(expected)
    return CheckSpec(f"pb-table/{a},{b}", "pb-table", run, provenance, shown, rtol)


def pb_gradient_check(a: str, b: str, constant: str, sign: int, label: str = "default") -> CheckSpec:
    """{C_a, C_b} against sign * dF/dC_constant for a single-constraint set."""
    def run(ctx: Context):
        cs = ctx.cset(label)
        i, j = ctx.indices((a, b))
        pb = ctx.point().pb_matrix((i, j))[..., 0, 1]
        grad = sign * ctx.evaluator(cs.partial(0, constant))
        return _max(scaled_residual(pb, grad, ctx.atol))

    sgn = "" if sign > 0 else "-"
    return CheckSpec(f"pb-table/{a},{b}/casimir-gradient", "pb-table", run, PUBLISHED,
                     f"{sgn}dF/d{constant}", None, label)


def constraint_zero_check(label: str) -> CheckSpec:
    def run(ctx: Context):
        cs = ctx.cset(label)
        values = ctx.point().c_values
        return _worst(*(scaled_residual(cs.value(r, values), 0, ctx.atol) for r in range(cs.s)))

    return CheckSpec(f"constraint-zero/{label}", "constraint-zero", run, PUBLISHED, "0", None, label)


def identity_zero_check(tag: str, body: str, provenance: str = PUBLISHED) -> CheckSpec:
    def run(ctx: Context):
        return _max(scaled_residual(ctx.evaluator(body), 0, ctx.atol))

    return CheckSpec(f"constraint-zero/{tag}", "constraint-zero", run, provenance, f"{body} = 0")


def conservation_check() -> CheckSpec:
    def run(ctx: Context):
        point = ctx.point()
        flows = np.sum(point.gradients * point.hamiltonian_flow()[..., None, :], axis=-1)
        return _max(scaled_residual(flows, 0, ctx.atol))

    return CheckSpec("conservation/all-constants", "conservation", run, TRIVIAL, "0")


def corollary_check(label: str, names: Sequence[str] | None = None, expected: str | None = None,
                    provenance: str = PUBLISHED) -> CheckSpec:
    def run(ctx: Context):
        fam, cs = ctx.system.family, ctx.cset(label)
        point = ctx.point()
        if names is not None:
            sel2 = ctx.indices(names)
            lhs = cyclic_expansion(point.pb_matrix(sel2))
            rhs = levi_civita_coefficient(fam, cs, (fam.hamiltonian_index,) + sel2, point)
            want = ctx.evaluator(expected)
            return _worst(scaled_residual(lhs, rhs, ctx.atol), scaled_residual(lhs, want, ctx.atol))
        others = [i for i in range(fam.m) if i != fam.hamiltonian_index]
        worst = 0.0
        for sel2 in itertools.combinations(others, 2 * fam.phase_space.n - 2):
            worst = max(worst, _max(verify_corollary(fam, cs, sel2, point, ctx.atol)))
        return worst

    if names is None:
        return CheckSpec(f"corollary/{label}/every-selection", "corollary", run, DERIVED, None, None, label)
    return CheckSpec(f"corollary/{label}/{','.join(names)}", "corollary", run, provenance, expected, None, label)


def homogeneous_check(label: str, with_brackets: bool = False) -> CheckSpec:
    """The linear homogeneous sum over every choice of the arbitrary
    indices (or of the constraint rows when s > 2n - 1)."""
    def run(ctx: Context):
        fam, cs = ctx.system.family, ctx.cset(label)
        point = ctx.point()
        slots = 2 * fam.phase_space.n - 1
        if cs.s <= slots:
            choices = [(tuple(range(cs.s)), arb) for arb in itertools.combinations(range(fam.m), slots - cs.s)]
        else:
            choices = [(rows, ()) for rows in itertools.combinations(range(cs.s), slots)]
        fs = fam.phase_space.coordinates if with_brackets else (None,)
        worst = 0.0
        for rows, arb in choices:
            for f in fs:
                terms = homogeneous_terms(fam, cs, arb, point, rows, f)
                if not terms:
                    continue
                total = np.abs(sum(terms))
                scale = np.maximum(1.0, np.max(np.abs(np.stack(terms)), axis=0))
                worst = max(worst, _max(np.maximum(total - ctx.atol, 0) / scale))
        return worst

    tag = "brackets" if with_brackets else "coefficients"
    return CheckSpec(f"homogeneous/{label}/{tag}", "homogeneous", run,
                     PUBLISHED if not with_brackets else DERIVED, "0", None, label)


def decomposition_check(names: Sequence[str], expected: str) -> CheckSpec:
    def run(ctx: Context):
        idx = ctx.indices(names)
        lhs = cyclic_expansion(ctx.point().pb_matrix(idx))
        return _max(scaled_residual(lhs, ctx.evaluator(expected), ctx.atol))

    return CheckSpec(f"decomposition/{','.join(names)}", "decomposition", run, PUBLISHED, expected)


def dependent_check(groups: Sequence[Sequence[str]]) -> CheckSpec:
    """Brackets whose selection contains a functionally dependent subset vanish."""
    def run(ctx: Context):
        fam = ctx.system.family
        point = ctx.point()
        dependent = [set(ctx.indices(g)) for g in groups]
        worst = 0.0
        for sel in itertools.combinations(range(fam.m), 2 * fam.phase_space.n - 1):
            if not any(g <= set(sel) for g in dependent):
                continue
            rows = point.gradients[..., list(sel), :]
            value = point.nambu_coordinates(sel)
            worst = max(worst, _max(_hadamard_scaled(value, rows) - ctx.atol))
        return max(worst, 0.0)

    label = ";".join(",".join(g) for g in groups)
    return CheckSpec(f"dependent-vanishing/{label}", "dependent-vanishing", run, PUBLISHED, "0")


def reconstruction_check(system_name: str, reference: str) -> CheckSpec:
    """Integrate the shipped bracket table; compare partials of the result
    and of the shipped constraint with the table, and check the two differ
    by a constant only."""
    def run(ctx: Context):
        table = shipped_table(system_name)
        rebuilt = reconstruct_constraint(table.partials, table.gauge)
        target = ctx.system.default_set.body(reference)
        mismatch = max(partial_mismatch(rebuilt, table.partials), partial_mismatch(target, table.partials))
        difference = poly.from_expr(target) - poly.from_expr(rebuilt)
        non_constant = max((abs(c) for mono, c in difference.terms.items()
                            if any(v in table.partials for v, _ in mono)), default=0.0)
        return max(mismatch, non_constant)

    return CheckSpec(f"reconstruction/{reference}", "reconstruction", run, PUBLISHED,
                     f"{reference} up to an additive constant", sampled=False)


def corrupted_table_check(system_name: str) -> CheckSpec:
    """A table with one partial perturbed must be rejected as non-closed."""
    def run(ctx: Context):
        table = shipped_table(system_name)
        key = sorted(table.partials)[0]
        other = sorted(table.partials)[1]
        broken = dict(table.partials)
        broken[key] = broken[key] + ex.Var(other)
        try:
            reconstruct_constraint(broken)
        except IncompatiblePartials:
            return 0.0
        return 1.0

    return CheckSpec("reconstruction/corrupted-table-rejected", "reconstruction", run, TRIVIAL,
                     "incompatibility error", sampled=False)


# ---------------------------------------------------------------------------
# generated bracket tables


def kepler_table() -> list[CheckSpec]:
    specs = []
    for a, b in itertools.combinations(range(3), 2):
        c = 3 - a - b
        eps = permutation_sign((a, b, c))
        specs.append(pb_check(f"L{a + 1}", f"L{b + 1}", f"{eps}*L{c + 1}"))
        specs.append(pb_check(f"A{a + 1}", f"A{b + 1}", f"{-2 * eps}*H*L{c + 1}"))
    for a in range(3):
        for b in range(3):
            c = 3 - a - b
            body = f"{permutation_sign((a, b, c))}*A{c + 1}" if a != b else "0"
            specs.append(pb_check(f"L{a + 1}", f"A{b + 1}", body))
    return specs


def _sphere_L(a: int, b: int) -> str:
    """L_ab for a != b as a signed reference to the stored L with a < b."""
    return f"L{a}{b}" if a < b else f"(-L{b}{a})"


def sphere_table(n: int = 4) -> list[CheckSpec]:
    specs = []
    idx = range(1, n + 1)
    for a, b in itertools.combinations(idx, 2):
        specs.append(pb_check(f"P{a}", f"P{b}", f"L{a}{b}"))
    for a, b in itertools.combinations(idx, 2):
        for c in idx:
            terms = []
            if a == c:
                terms.append(f"P{b}")
            if b == c:
                terms.append(f"-P{a}")
            specs.append(pb_check(f"L{a}{b}", f"P{c}", " + ".join(terms) if terms else "0"))
    pairs = list(itertools.combinations(idx, 2))
    for (a, b), (c, d) in itertools.combinations(pairs, 2):
        terms = []
        if b == d and a != c:
            terms.append(_sphere_L(a, c))
        if a == c and b != d:
            terms.append(_sphere_L(b, d))
        if b == c and a != d:
            terms.append("-" + _sphere_L(a, d))
        if a == d and b != c:
            terms.append("-" + _sphere_L(b, c))
        specs.append(pb_check(f"L{a}{b}", f"L{c}{d}", " + ".join(terms) if terms else "0"))
    return specs


def winternitz_table(n: int = 3) -> list[CheckSpec]:
    """{T_ij, T_rs} = i d_jr T_is - i d_is T_rj over the shipped pairs; the
    right side may involve T's outside the family, evaluated directly."""
    shipped = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2)]
    specs = []
    for (i, j), (r, s) in itertools.combinations(shipped, 2):
        parts = []
        if j == r:
            parts.append(ex.Const(1j) * catalog.winternitz_T(i, s, n))
        if i == s:
            parts.append(-ex.Const(1j) * catalog.winternitz_T(r, j, n))
        body = ex.add(*parts) if parts else ex.const(0)
        specs.append(pb_check(f"T{i + 1}{j + 1}", f"T{r + 1}{s + 1}", body, PUBLISHED, WINTERNITZ_RTOL))
    return specs


# ---------------------------------------------------------------------------
# registry


def _ho_finals(label: str = "default") -> list[CheckSpec]:
    return [
        final_check(label, ("C1", "C2", "C4"), "-C5"),
        final_check(label, ("C1", "C2", "C3"), "0"),
        final_check(label, ("C3", "C4", "C5"), "2*C3"),
        final_check(label, ("C1", "C4", "C5"), "-2*(C2 - C3)"),
    ]


def _generic(system: MotionSystem) -> list[CheckSpec]:
    rtol = WINTERNITZ_RTOL if system.name == "winternitz-3" else None
    specs = [conservation_check()]
    for label in system.constraint_sets:
        specs.append(constraint_zero_check(label))
        specs.append(every_selection_check(label, rtol))
        if system.family.hamiltonian_index is not None:
            specs.append(corollary_check(label))
        specs.append(homogeneous_check(label))
    return specs


def _registered(name: str) -> list[CheckSpec]:
    if name == "harmonic-oscillator":
        return _ho_finals() + [
            pb_check("C2", "C4", "-C5"),
            pb_check("C3", "C4", "C5"),
            pb_check("C2", "C5", "k*C4"),
            pb_check("C3", "C5", "-k*C4"),
            pb_check("C4", "C5", "-2*(C2 - C3)"),
            pb_check("C2", "C3", "0"),
            corollary_check("default", ("C2", "C4"), "-C5"),
            corollary_check("default", ("C2", "C3"), "0"),
            homogeneous_check("default", with_brackets=True),
            dependent_check([("C1", "C2", "C3")]),
            reconstruction_check("harmonic-oscillator", "F2"),
            corrupted_table_check("harmonic-oscillator"),
        ]
    if name == "harmonic-oscillator/hamiltonian-free":
        return [final_check("default", ("C3", "C4", "C5"), "2*C3")]
    if name == "harmonic-oscillator/extended-c6":
        return _ho_finals() + [dependent_check([("C1", "C2", "C3"), ("C2", "C3", "C6"),
                                                ("C1", "C2", "C6"), ("C1", "C3", "C6")])]
    if name == "harmonic-oscillator/extended-c7":
        return _ho_finals() + [dependent_check([("C1", "C2", "C3"), ("C4", "C5", "C7")])]
    if name == "smorodinsky-winternitz":
        return [
            pb_check("C2", "C3", "C4"),
            pb_check("C2", "C4", "4*alpha1*C2 - 8*omega^2*C3 - 4*alpha1*C1"),
            pb_check("C3", "C4", "-48*C2^2 + 64*C1*C2 - 4*alpha1*C3 + 64*omega^2*alpha2 - 16*C1^2"),
            pb_gradient_check("C2", "C3", "C4", +1),
            pb_gradient_check("C2", "C4", "C3", -1),
            pb_gradient_check("C3", "C4", "C2", +1),
            final_check("default", ("C1", "C2", "C4"), "-(4*alpha1*C2 - 8*omega^2*C3 - 4*alpha1*C1)"),
            # the same bracket with the sign implied by -dF/dC3 and by {f, H}{C2, C4}
            final_check("default", ("C1", "C2", "C4"), "4*alpha1*C2 - 8*omega^2*C3 - 4*alpha1*C1",
                        DERIVED, tag="C1,C2,C4/from-dF-dC3"),
            final_check("default", ("C2", "C3", "C4"), "-(4*alpha1*C3 + 32*C2^2 - 32*C1*C2)"),
            homogeneous_check("default", with_brackets=True),
            reconstruction_check("smorodinsky-winternitz", "F"),
            corrupted_table_check("smorodinsky-winternitz"),
        ]
    if name == "kepler-coulomb":
        return kepler_table() + [
            final_check("default", ("H", "L1", "L2", "L3", "A1"), "A2*L3 - A3*L2"),
            final_check("default", ("L1", "L2", "L3", "A1", "A2"), "L3*(L1^2 + L2^2 + L3^2)"),
            final_check("default", ("H", "L1", "L2", "A2", "A3"), "-(A1*A3 + 2*H*L1*L3)"),
            decomposition_check(("L1", "L2", "L3", "A1"), "A2*L3 - A3*L2"),
            corollary_check("default", ("L1", "L2", "L3", "A1"), "A2*L3 - A3*L2"),
            homogeneous_check("default", with_brackets=True),
        ]
    if name == "winternitz-3":
        return winternitz_table() + [
            final_check("default", ("H", "T11", "T22", "T12", "T13"), "T12*T13", rtol=WINTERNITZ_RTOL),
            final_check("default", ("T11", "T22", "T33", "T12", "T13"), "T12*T13/(2*k)", rtol=WINTERNITZ_RTOL),
            homogeneous_check("default", with_brackets=True),
        ]
    if name == "sphere-4":
        specs = sphere_table() + [
            identity_zero_check("L12P3-L13P2+L23P1", "L12*P3 - L13*P2 + L23*P1"),
            identity_zero_check("L12P4-L14P2+L24P1", "L12*P4 - L14*P2 + L24*P1"),
            identity_zero_check("L13P4-L14P3+L34P1", "L13*P4 - L14*P3 + L34*P1"),
            identity_zero_check("L12L34+L14L23-L13L24", "L12*L34 + L14*L23 - L13*L24"),
        ]
        for label in ("default", "primed"):
            specs += [
                final_check(label, ("H", "P1", "P2", "P3", "P4", "L12", "L13"),
                            "L12*P2*P4 + L13*P3*P4 - L14*(P1^2 + P2^2 + P3^2)"),
                final_check(label, ("P1", "P2", "P3", "P4", "L12", "L13", "L24"), "-P1*P2"),
                final_check(label, ("H", "L12", "L13", "L14", "L23", "L24", "L34"), "0"),
            ]
        return specs
    return []


def checks_for(system: MotionSystem, constraint_set: str | None = None) -> list[CheckSpec]:
    specs = _generic(system) + _registered(system.name)
    if constraint_set is not None:
        system.constraint_set(constraint_set)
        specs = [s for s in specs if s.constraint_set in (None, constraint_set)]
    return specs


# ---------------------------------------------------------------------------
# system-independent checks


def random_polynomial(rng: np.random.Generator, variables: Sequence[str], degree: int = 3,
                      terms: int = 6) -> ex.Expr:
    """Sum of random monomials with total degree at most ``degree``."""
    out = []
    for _ in range(terms):
        coeff = float(np.round(rng.uniform(-2, 2), 3))
        powers = rng.multinomial(int(rng.integers(0, degree + 1)), [1 / len(variables)] * len(variables))
        factors = [ex.Var(v) ** int(k) for v, k in zip(variables, powers) if k]
        out.append(ex.mul(ex.const(coeff), *factors))
    return ex.add(*out)


def _points(rng, variables, count, lo=-1.5, hi=1.5) -> dict:
    return {v: rng.uniform(lo, hi, size=count) for v in variables}


def decomposition_random_check(n: int) -> CheckSpec:
    def run(ctx: Context):
        rng = ctx.rng(f"decomposition-n{n}")
        ps = PhaseSpace(n)
        fs = [random_polynomial(rng, ps.coordinates, 3, 5) for _ in range(2 * n)]
        b = _points(rng, ps.coordinates, ctx.samples)
        return _max(scaled_residual(decomposed_bracket(fs, b, ps), nambu(fs, b, ps), ctx.atol))

    return CheckSpec(f"decomposition/random-polynomials-n{n}", "decomposition", run, DERIVED,
                     "Jacobian of the same arguments")


def fundamental_identity_check(points: int = 50) -> CheckSpec:
    """{f1,f2,{g1,g2,g3}} = {{f1,f2,g1},g2,g3} + {g1,{f1,f2,g2},g3}
    + {g1,g2,{f1,f2,g3}} for 3-ary Jacobian brackets on R^3."""
    def run(ctx: Context):
        rng = ctx.rng("fi-n3")
        xs = ("x1", "x2", "x3")
        f1, f2, g1, g2, g3 = (random_polynomial(rng, xs, 3, 4) for _ in range(5))

        def br(a, b, c):
            return jacobian_expr([a, b, c], xs)

        lhs = br(f1, f2, br(g1, g2, g3))
        rhs = br(br(f1, f2, g1), g2, g3) + br(g1, br(f1, f2, g2), g3) + br(g1, g2, br(f1, f2, g3))
        b = _points(rng, xs, points)
        return _max(scaled_residual(ex.compile_expr(lhs)(b), ex.compile_expr(rhs)(b), ctx.atol))

    return CheckSpec("fi-n3/random-cubics", "fi-n3", run, DERIVED, "0", FI_RTOL)


def antisymmetry_check(n: int = 2) -> CheckSpec:
    def run(ctx: Context):
        rng = ctx.rng("antisymmetry")
        ps = PhaseSpace(n)
        fs = [random_polynomial(rng, ps.coordinates, 3, 5) for _ in range(2 * n)]
        b = _points(rng, ps.coordinates, ctx.samples)
        base = nambu(fs, b, ps)
        worst = 0.0
        for i, j in itertools.combinations(range(2 * n), 2):
            swapped = list(fs)
            swapped[i], swapped[j] = swapped[j], swapped[i]
            worst = max(worst, _max(scaled_residual(nambu(swapped, b, ps), -base, ctx.atol)))
        return worst

    return CheckSpec(f"antisymmetry/random-polynomials-n{n}", "antisymmetry", run, TRIVIAL, "sign flip")


def leibniz_check(n: int = 2) -> CheckSpec:
    def run(ctx: Context):
        rng = ctx.rng("leibniz")
        ps = PhaseSpace(n)
        f, g, *rest = [random_polynomial(rng, ps.coordinates, 3, 5) for _ in range(2 * n + 1)]
        b = _points(rng, ps.coordinates, ctx.samples)
        fv, gv = ex.compile_expr(f)(b), ex.compile_expr(g)(b)
        lhs = nambu([f * g] + rest, b, ps)
        rhs = fv * nambu([g] + rest, b, ps) + gv * nambu([f] + rest, b, ps)
        return _max(scaled_residual(lhs, rhs, ctx.atol))

    return CheckSpec(f"leibniz/random-polynomials-n{n}", "leibniz", run, TRIVIAL, "product rule")


def structural_checks() -> list[CheckSpec]:
    return [decomposition_random_check(2), decomposition_random_check(3), fundamental_identity_check(),
            antisymmetry_check(), leibniz_check()]


# ---------------------------------------------------------------------------
# running


def _execute(spec: CheckSpec, ctx: Context, prefix: str, error: str | None = None) -> CheckResult:
    tolerance = spec.rtol if spec.rtol is not None else ctx.rtol
    samples = ctx.samples if spec.sampled else 0
    name = f"{prefix}/{spec.name}"
    if error is not None:
        return CheckResult(name, spec.kind, 0, float("inf"), tolerance, False, spec.provenance, error)
    try:
        residual = float(spec.run(ctx))
        note = None
    except (ArithmeticError, ex.ExprError, ValueError) as err:
        residual, note = float("inf"), f"{type(err).__name__}: {err}"
    residual = _round(residual)
    return CheckResult(name, spec.kind, samples, residual, tolerance, residual <= tolerance,
                       spec.provenance, note)


def run_system(system: MotionSystem, seed: int, samples: int, rtol: float, atol: float,
               constraint_set: str | None = None) -> list[CheckResult]:
    specs = checks_for(system, constraint_set)
    ctx = Context(system, seed, samples, rtol, atol)
    try:
        ctx.binding = batch_binding(system, sample(system, seed, samples))
    except SamplingExhausted as err:
        return [_execute(s, ctx, system.name, f"sampling failed: {err}") for s in specs]
    return [_execute(s, ctx, system.name) for s in specs]


def run_structural(seed: int, samples: int, rtol: float, atol: float) -> list[CheckResult]:
    ctx = Context(None, seed, samples, rtol, atol)
    return [_execute(s, ctx, STRUCTURAL) for s in structural_checks()]


def run_suite(systems: Sequence[MotionSystem], seed: int = 42, samples: int = 100,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL, constraint_set: str | None = None,
              structural: bool = False) -> VerificationReport:
    results = []
    for system in systems:
        results += run_system(system, seed, samples, rtol, atol, constraint_set)
    if structural:
        results += run_structural(seed, samples, rtol, atol)
    results.sort(key=lambda r: r.name)
    meta = {
        "seed": seed,
        "samples": samples,
        "rtol": rtol,
        "atol": atol,
        "version": __version__,
        "systems": [s.name for s in systems] + ([STRUCTURAL] if structural else []),
        "params": {s.name: dict(sorted(s.params.items())) for s in systems},
    }
    return VerificationReport(meta, results)


def all_systems() -> list[MotionSystem]:
    return [catalog.builtin(name) for name in catalog.names()]
