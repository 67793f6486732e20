"""Line-oriented text format for motion systems and Poisson-bracket tables.

System files::

    system "harmonic-oscillator"
    dof 2
    param k = 1
    define r2 = q1^2 + q2^2          # auxiliary, inlined into later lines
    hamiltonian = (p1^2 + p2^2)/2 + k*r2/2
    constant C2 = p1^2/2 + k*q1^2/2  # order of appearance fixes the ordering
    constraintset "default"
    constraint F1 = C1 - C2 - C3
    guard abs(q2) >= 0.1             # |expr| >= bound
    guard 1 - r2 >= 0.1              # Re(expr) >= bound
    box q1 -1 1

``hamiltonian = C1`` (a bare constant name) marks a family member as the
Hamiltonian; the constant may be declared later.

Table files::

    target F2
    partial C2 = 2*C3
    gauge C2 = 0
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .. import expr as ex
from ..brackets import Observable, PhaseSpace
from ..constraints import ConstantFamily, ConstraintSet
from .model import Guard, MotionSystem, SystemDefinitionError

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_ASSIGN = re.compile(rf"^({_NAME})\s*=\s*(.+)$")
_QUOTED = re.compile(r'^"([^"]+)"$')
_GUARD = re.compile(r"^(.+?)\s*>=\s*(\S+)$")
_ABS = re.compile(r"^abs\s*\((.*)\)$")


class SystemFileError(SystemDefinitionError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


def _strip_comment(text: str) -> str:
    out, quoted = [], False
    for ch in text:
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).rstrip()


@dataclass
class _Draft:
    name: str | None = None
    dof: int | None = None
    params: dict[str, float] = field(default_factory=dict)
    defines: dict[str, ex.Expr] = field(default_factory=dict)
    hamiltonian: ex.Expr | None = None
    hamiltonian_ref: str | None = None
    constants: list[tuple[str, ex.Expr]] = field(default_factory=list)
    sets: dict[str, list[tuple[str, ex.Expr]]] = field(default_factory=dict)
    current_set: str | None = None
    guards: list[Guard] = field(default_factory=list)
    boxes: dict[str, tuple[float, float]] = field(default_factory=dict)


class _Loader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.d = _Draft()
        self.lineno = 0
        self.raw = ""

    def fail(self, message: str, column: int | None = None):
        raise SystemFileError(message, self.lineno, column)

    def expression(self, source: str) -> ex.Expr:
        column = self.raw.find(source) + 1
        try:
            e = ex.parse(source)
        except ex.ParseError as err:
            self.fail(err.message, column + err.column - 1)
        if self.d.defines:
            e = ex.substitute(e, self.d.defines)
        return e

    def number(self, text: str) -> float:
        try:
            return float(text)
        except ValueError:
            self.fail(f"expected a number, got {text!r}")

    def assignment(self, rest: str) -> tuple[str, str]:
        m = _ASSIGN.match(rest)
        if not m:
            self.fail("expected '<name> = <expression>'")
        return m.group(1), m.group(2)

    def load(self) -> MotionSystem:
        for self.lineno, raw in enumerate(self.lines, start=1):
            self.raw = raw
            line = _strip_comment(raw).strip()
            if not line:
                continue
            keyword, _, rest = line.partition(" ")
            handler = getattr(self, "do_" + keyword, None)
            if handler is None:
                self.fail(f"unknown directive {keyword!r}", raw.find(keyword) + 1)
            handler(rest.strip())
        self.lineno = None
        return self.build()

    def do_system(self, rest):
        m = _QUOTED.match(rest)
        if not m:
            self.fail('expected system "<name>"')
        self.d.name = m.group(1)

    def do_dof(self, rest):
        if not rest.isdigit() or int(rest) < 1:
            self.fail(f"dof must be a positive integer, got {rest!r}")
        if self.d.constants or self.d.hamiltonian is not None:
            self.fail("dof must come before the hamiltonian and constants")
        self.d.dof = int(rest)

    def do_param(self, rest):
        name, value = self.assignment(rest)
        self.d.params[name] = self.number(value)

    def do_define(self, rest):
        name, body = self.assignment(rest)
        self.d.defines[name] = self.expression(body)

    def do_hamiltonian(self, rest):
        if not rest.startswith("="):
            self.fail("expected 'hamiltonian = <expression>'")
        body = rest[1:].strip()
        if self.d.hamiltonian is not None or self.d.hamiltonian_ref is not None:
            self.fail("hamiltonian given twice")
        if re.fullmatch(_NAME, body) and body not in self.coordinates() and body not in self.d.params \
                and body not in self.d.defines:
            self.d.hamiltonian_ref = body
        else:
            self.d.hamiltonian = self.expression(body)

    def do_constant(self, rest):
        name, body = self.assignment(rest)
        if any(name == c for c, _ in self.d.constants):
            self.fail(f"constant {name} declared twice")
        self.d.constants.append((name, self.expression(body)))

    def do_constraintset(self, rest):
        m = _QUOTED.match(rest)
        if not m:
            self.fail('expected constraintset "<label>"')
        label = m.group(1)
        if label in self.d.sets:
            self.fail(f"constraint set {label!r} declared twice")
        self.d.sets[label] = []
        self.d.current_set = label

    def do_constraint(self, rest):
        name, body = self.assignment(rest)
        if self.d.current_set is None:
            self.d.sets["default"] = []
            self.d.current_set = "default"
        self.d.sets[self.d.current_set].append((name, self.expression(body)))

    def do_guard(self, rest):
        m = _GUARD.match(rest)
        if not m:
            self.fail("expected 'guard <expression> >= <bound>'")
        body, bound = m.group(1).strip(), self.number(m.group(2))
        inner = _ABS.match(body)
        if inner:
            self.d.guards.append(Guard(self.expression(inner.group(1)), bound, absolute=True))
        else:
            self.d.guards.append(Guard(self.expression(body), bound, absolute=False))

    def do_box(self, rest):
        parts = rest.split()
        if len(parts) != 3:
            self.fail("expected 'box <coordinate> <lo> <hi>'")
        self.d.boxes[parts[0]] = (self.number(parts[1]), self.number(parts[2]))

    def coordinates(self) -> tuple[str, ...]:
        if self.d.dof is None:
            self.fail("dof must be declared before it is used")
        return PhaseSpace(self.d.dof).coordinates

    def build(self) -> MotionSystem:
        d = self.d
        if d.name is None:
            self.fail("missing 'system' line")
        if d.dof is None:
            self.fail("missing 'dof' line")
        if d.hamiltonian is None and d.hamiltonian_ref is None:
            self.fail("missing 'hamiltonian' line")
        if not d.constants:
            self.fail("no constants of motion declared")
        if not d.sets or not any(d.sets.values()):
            self.fail("no constraints declared")
        ps = PhaseSpace(d.dof)
        members = [Observable(n, body) for n, body in d.constants]
        if d.hamiltonian_ref is not None:
            names = [o.name for o in members]
            if d.hamiltonian_ref not in names:
                self.fail(f"hamiltonian refers to unknown constant {d.hamiltonian_ref!r}")
            idx = names.index(d.hamiltonian_ref)
            family = ConstantFamily(members, members[idx], ps, idx)
        else:
            family = ConstantFamily(members, Observable("H", d.hamiltonian), ps, None)
        sets = {}
        for label, items in d.sets.items():
            if not items:
                self.fail(f"constraint set {label!r} is empty")
            sets[label] = ConstraintSet(label, tuple(items))
        return MotionSystem(
            name=d.name,
            phase_space=ps,
            params=dict(d.params),
            family=family,
            constraint_sets=sets,
            guards=list(d.guards),
            boxes=dict(d.boxes),
        )


def load(text: str) -> MotionSystem:
    """Parse and validate a system file's contents."""
    return _Loader(text).load()


def load_path(path: str | Path) -> MotionSystem:
    return load(Path(path).read_text())


@dataclass
class BracketTable:
    partials: dict[str, ex.Expr]
    target: str | None = None
    gauge: dict[str, complex] = field(default_factory=dict)


def load_table(text: str) -> BracketTable:
    table = BracketTable({})
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "target":
            table.target = rest
            continue
        if keyword not in ("partial", "gauge"):
            raise SystemFileError(f"unknown directive {keyword!r}", lineno)
        m = _ASSIGN.match(rest)
        if not m:
            raise SystemFileError(f"expected '{keyword} <name> = <expression>'", lineno)
        try:
            body = ex.parse(m.group(2))
        except ex.ParseError as err:
            raise SystemFileError(err.message, lineno, raw.find(m.group(2)) + err.column) from None
        if keyword == "partial":
            if m.group(1) in table.partials:
                raise SystemFileError(f"partial for {m.group(1)} given twice", lineno)
            table.partials[m.group(1)] = body
        else:
            table.gauge[m.group(1)] = complex(ex.evaluate(body, {}))
    if not table.partials:
        raise SystemFileError("table has no 'partial' lines")
    return table


def load_table_path(path: str | Path) -> BracketTable:
    return load_table(Path(path).read_text())


# ---------------------------------------------------------------------------
# shipped files

DATA_FILES = {
    "harmonic-oscillator": "harmonic_oscillator.sys",
    "smorodinsky-winternitz": "smorodinsky_winternitz.sys",
    "kepler-coulomb": "kepler_coulomb.sys",
    "winternitz-3": "winternitz_3.sys",
    "sphere-4": "sphere_4.sys",
}

TABLE_FILES = {
    "harmonic-oscillator": "harmonic_oscillator.table",
    "smorodinsky-winternitz": "smorodinsky_winternitz.table",
}


def data_text(filename: str) -> str:
    return resources.files(__package__).joinpath("data", filename).read_text()


def shipped(name: str) -> MotionSystem:
    return load(data_text(DATA_FILES[name]))


def shipped_table(name: str) -> BracketTable:
    return load_table(data_text(TABLE_FILES[name]))
