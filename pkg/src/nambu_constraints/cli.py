"""Command line: verify, bracket, reconstruct, list."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import expr as ex
from .brackets import Observable, jacobian_value, permutation_sign
from .constraints import (
    ConstraintError,
    IncompatiblePartials,
    IndexSelection,
    levi_civita_coefficient,
    partial_mismatch,
    reconstruct_constraint,
    scaled_residual,
)
from .harness import DEFAULT_ATOL, DEFAULT_RTOL, all_systems, checks_for, run_suite
from .polynomial import NotPolynomial
from .systems import catalog
from .systems.model import MotionSystem, SamplingExhausted, SystemDefinitionError, sample
from .systems.sysfile import TABLE_FILES, BracketTable, load_path, load_table_path, shipped_table


class UsageError(Exception):
    pass


def _key_values(text: str, what: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"{what}: expected name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"{what}: {value!r} is not a number") from None
    return out


def resolve_system(selector: str) -> MotionSystem:
    if selector in catalog.BUILDERS:
        return catalog.builtin(selector)
    path = Path(selector)
    if path.is_file():
        return load_path(path)
    raise UsageError(f"unknown system {selector!r}; use one of {', '.join(catalog.names())}, "
                     f"'all', or a system file")


def _apply_params(system: MotionSystem, params: dict[str, float]) -> MotionSystem:
    relevant = {k: v for k, v in params.items() if k in system.params}
    return system.with_params(relevant) if relevant else system


def cmd_verify(args) -> int:
    params = {}
    for item in args.param:
        params.update(_key_values(item, "--param"))
    if args.system == "all":
        systems = all_systems()
        structural = True
        unknown = set(params) - {p for s in systems for p in s.params}
        if unknown:
            raise UsageError(f"no system has parameter(s) {sorted(unknown)}")
    else:
        systems = [resolve_system(args.system)]
        structural = False
        unknown = set(params) - set(systems[0].params)
        if unknown:
            raise UsageError(f"{systems[0].name} has no parameter(s) {sorted(unknown)}")
    systems = [_apply_params(s, params) for s in systems]
    if args.constraint_set is not None:
        systems = [s for s in systems if args.constraint_set in s.constraint_sets]
        if not systems:
            raise UsageError(f"no selected system has a constraint set {args.constraint_set!r}")
    report = run_suite(systems, args.seed, args.samples, args.rtol, args.atol, args.constraint_set, structural)
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_text())
    return 0 if report.passed else 1


def _argument(system: MotionSystem, name: str) -> Observable:
    coords = system.phase_space.coordinates
    if name.startswith("f:"):
        name = name[2:]
        if name not in coords:
            raise UsageError(f"f:{name} must name a phase coordinate")
    if name in coords:
        return Observable(name, ex.Var(name))
    if name in system.family.names:
        return system.family.members[system.family.index(name)]
    raise UsageError(f"unknown bracket argument {name!r}; use coordinates, constants "
                     f"({', '.join(system.family.names)}) or f:<coordinate>")


def _format(z) -> str:
    z = complex(z)
    if abs(z.imag) <= 1e-14 * max(1.0, abs(z.real)):
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}i"


def _registered_expected(system: MotionSystem, names: list[str]) -> list[tuple[str, int, str, str]]:
    """Registered final checks whose selection is a permutation of
    ``names``: (expected expression, permutation sign, set label, provenance)."""
    found = []
    for spec in checks_for(system):
        if spec.kind != "final" or spec.expected is None:
            continue
        selection = spec.name.split("/")[2].split(",")
        if sorted(selection) == sorted(names):
            order = [selection.index(n) for n in names]
            found.append((spec.expected, permutation_sign(order), spec.constraint_set, spec.provenance))
    return found


def cmd_bracket(args) -> int:
    system = resolve_system(args.system)
    ps = system.phase_space
    names = [s.strip() for s in args.args.split(",") if s.strip()]
    if len(names) != ps.dimension:
        raise UsageError(f"a bracket on {system.name} takes {ps.dimension} arguments, got {len(names)}")
    observables = [_argument(system, n) for n in names]
    if args.at:
        coords = _key_values(args.at, "--at")
        missing = [c for c in ps.coordinates if c not in coords]
        if missing:
            raise UsageError(f"--at is missing {', '.join(missing)}")
        point = {c: coords[c] for c in ps.coordinates}
    else:
        point = sample(system, args.seed, 1)[0].coords
    b = system.binding(point)
    value = jacobian_value(observables, ps.coordinates, b)
    print(f"point: {', '.join(f'{c}={point[c]:.12g}' for c in ps.coordinates)}")
    print(f"bracket {{{', '.join(names)}}} = {_format(value)}")

    head, rest = names[0], names[1:]
    if not head.startswith("f:") and head not in ps.coordinates:
        return 0
    if any(n not in system.family.names for n in rest):
        return 0
    f = observables[0]
    fam = system.family
    point_data = fam.at(b)
    fdot = np.sum(f.gradient(ps.coordinates, b) * point_data.hamiltonian_flow())
    print(f"fdot = {{f, H}} = {_format(fdot)}")
    worst = 0.0
    for expected, sign, label, provenance in _registered_expected(system, rest):
        coeff = sign * complex(ex.compile_expr(ex.parse(expected))({**b, **point_data.c_values}))
        residual = float(np.max(scaled_residual(value, coeff * fdot)))
        worst = max(worst, residual)
        shown = expected if sign > 0 else f"-({expected})"
        print(f"registered ({label}, {provenance}): {shown} = {_format(coeff)}; residual {residual:.3e}")
    cs = system.default_set
    if len(set(rest)) == len(rest) and fam.m - len(rest) == cs.s:
        idx = tuple(fam.index(n) for n in rest)
        coeff = complex(levi_civita_coefficient(fam, cs, idx, point_data))
        residual = float(np.max(scaled_residual(value, coeff * fdot)))
        worst = max(worst, residual)
        sel = IndexSelection(tuple(sorted(idx)), fam.m)
        print(f"normalization constant ({cs.label}, complement "
              f"{','.join(fam.names[i] for i in sel.complement)}) = {_format(coeff)}; residual {residual:.3e}")
    return 0 if worst <= DEFAULT_RTOL else 1


def cmd_reconstruct(args) -> int:
    system = resolve_system(args.system)
    if args.table:
        table = load_table_path(args.table)
    elif system.name in TABLE_FILES:
        table = shipped_table(system.name)
    else:
        raise UsageError(f"no shipped table for {system.name}; pass --table")
    gauge = dict(table.gauge)
    for item in args.gauge:
        gauge.update(_key_values(item, "--gauge"))
    try:
        rebuilt = reconstruct_constraint(table.partials, gauge or None)
    except IncompatiblePartials as err:
        print(f"incompatible: {err}")
        return 1
    except NotPolynomial as err:
        print(f"not polynomial: {err}")
        return 1
    except ConstraintError as err:
        raise UsageError(str(err)) from None
    print(f"F = {ex.to_string(rebuilt)}")
    print("compatible: mixed partials agree")
    reference = _reference(system, table)
    if reference is not None:
        name, body = reference
        mismatch = partial_mismatch(body, table.partials)
        print(f"reference {name}: max partial difference {mismatch:.3e}")
        return 0 if mismatch <= DEFAULT_RTOL else 1
    return 0


def _reference(system: MotionSystem, table: BracketTable):
    for cs in system.constraint_sets.values():
        if table.target is not None and table.target in cs.names:
            return table.target, cs.body(table.target)
    return None


def cmd_list(args) -> int:
    for name in catalog.names():
        s = catalog.builtin(name)
        sets = ", ".join(f"{label}: s={cs.s}" for label, cs in s.constraint_sets.items())
        print(f"{name:40s} n={s.n}  m={s.m}  {sets}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nambu-constraints",
                                     description="Nambu bracket normalization constants from constraint functionals")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the registered identity checks")
    v.add_argument("--system", default="all", help="catalog name, system file, or 'all'")
    v.add_argument("--constraint-set", default=None)
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    v.add_argument("--atol", type=float, default=DEFAULT_ATOL)
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bracket", help="evaluate one canonical Nambu bracket")
    b.add_argument("--system", required=True)
    b.add_argument("--args", required=True, help="comma list: coordinates, constants, f:<coordinate>")
    where = b.add_mutually_exclusive_group()
    where.add_argument("--seed", type=int, default=42)
    where.add_argument("--at", default=None, help="q1=...,p1=...,...")
    b.set_defaults(func=cmd_bracket)

    r = sub.add_parser("reconstruct", help="integrate a Poisson-bracket table into a constraint")
    r.add_argument("--system", required=True)
    r.add_argument("--table", default=None, help="table file (defaults to the shipped one)")
    r.add_argument("--gauge", action="append", default=[], metavar="C=VALUE")
    r.set_defaults(func=cmd_reconstruct)

    ls = sub.add_parser("list", help="list the catalog")
    ls.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "samples", 1) < 1:
        parser.error("--samples must be at least 1")
    try:
        return args.func(args)
    except (UsageError, SystemDefinitionError, SamplingExhausted, ex.ExprError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
