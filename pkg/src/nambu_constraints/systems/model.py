from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .. import expr as ex
from ..brackets import Observable, PhaseSpace
from ..constraints import ConstantFamily, ConstraintSet

DEFAULT_BOX = (-2.0, 2.0)
DEFAULT_GUARD_BOUND = 0.1
MAX_REJECTIONS = 10_000


class SystemDefinitionError(Exception):
    """Invalid system definition."""


class SamplingExhausted(Exception):
    pass


@dataclass(frozen=True)
class Guard:
    """Sampling-time condition: |expr| >= bound, or Re(expr) >= bound when
    ``absolute`` is False."""

    expr: ex.Expr
    bound: float = DEFAULT_GUARD_BOUND
    absolute: bool = True

    def holds(self, value) -> bool:
        value = complex(value)
        if self.absolute:
            return abs(value) >= self.bound
        return value.real >= self.bound

    def __str__(self):
        body = f"abs({self.expr})" if self.absolute else str(self.expr)
        return f"{body} >= {self.bound:g}"


@dataclass
class MotionSystem:
    name: str
    phase_space: PhaseSpace
    params: dict[str, float]
    family: ConstantFamily
    constraint_sets: dict[str, ConstraintSet]
    guards: list[Guard] = field(default_factory=list)
    boxes: dict[str, tuple[float, float]] = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        validate(self)

    @property
    def n(self) -> int:
        return self.phase_space.n

    @property
    def m(self) -> int:
        return self.family.m

    @property
    def hamiltonian(self) -> Observable:
        return self.family.hamiltonian

    @property
    def default_set(self) -> ConstraintSet:
        return next(iter(self.constraint_sets.values()))

    def constraint_set(self, label: str | None = None) -> ConstraintSet:
        if label is None:
            return self.default_set
        try:
            return self.constraint_sets[label]
        except KeyError:
            known = ", ".join(self.constraint_sets)
            raise SystemDefinitionError(f"{self.name} has no constraint set {label!r} (known: {known})") from None

    def box(self, coordinate: str) -> tuple[float, float]:
        return self.boxes.get(coordinate, DEFAULT_BOX)

    def with_params(self, overrides: Mapping[str, float]) -> "MotionSystem":
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise SystemDefinitionError(f"{self.name} has no parameter(s) {sorted(unknown)}")
        return replace(self, params={**self.params, **{k: float(v) for k, v in overrides.items()}})

    def binding(self, coords: Mapping[str, object]) -> dict:
        return {**self.params, **coords}

    def summary(self) -> dict:
        sets = {label: cs.s for label, cs in self.constraint_sets.items()}
        return {"name": self.name, "n": self.n, "m": self.m, "s": sets}


def validate(system: MotionSystem) -> None:
    coords = set(system.phase_space.coordinates)
    params = set(system.params)
    consts = set(system.family.names)
    for a, b, what in ((coords, params, "parameter"), (coords, consts, "constant"), (params, consts, "constant")):
        clash = a & b
        if clash:
            raise SystemDefinitionError(f"{what} name(s) {sorted(clash)} collide with other symbols")
    phase_symbols = coords | params
    for obs in system.family.members + (system.hamiltonian,):
        extra = obs.free_variables() - phase_symbols
        if extra:
            raise SystemDefinitionError(f"{obs.name} uses undeclared symbol(s) {sorted(extra)}")
    slots = 2 * system.phase_space.n - 1
    for cs in system.constraint_sets.values():
        if system.family.m != slots + cs.s:
            raise SystemDefinitionError(
                f"constraint set {cs.label!r}: {system.family.m} constants with {cs.s} constraint(s) "
                f"on {system.phase_space.n} degrees of freedom; need m = 2n - 1 + s = {slots + cs.s}")
        for fname, body in cs.functionals:
            used = ex.free_variables(body)
            if used & coords:
                raise SystemDefinitionError(f"constraint {fname} refers to phase coordinate(s) {sorted(used & coords)}")
            extra = used - consts - params
            if extra:
                raise SystemDefinitionError(f"constraint {fname} uses undeclared symbol(s) {sorted(extra)}")
    for g in system.guards:
        extra = ex.free_variables(g.expr) - phase_symbols
        if extra:
            raise SystemDefinitionError(f"guard {g} uses undeclared symbol(s) {sorted(extra)}")
    for c, (lo, hi) in system.boxes.items():
        if c not in coords:
            raise SystemDefinitionError(f"box given for unknown coordinate {c!r}")
        if not lo < hi:
            raise SystemDefinitionError(f"empty sampling box for {c}")


@dataclass(frozen=True)
class SamplePoint:
    coords: dict[str, float]
    constants: dict[str, complex]


def constants_at(system: MotionSystem, coords: Mapping[str, float]) -> dict[str, complex]:
    b = system.binding(coords)
    return {c.name: complex(c.value(b)) for c in system.family.members}


def sample(system: MotionSystem, seed: int, count: int) -> list[SamplePoint]:
    """Guarded uniform draws from the sampling boxes; deterministic in seed."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    coords = system.phase_space.coordinates
    lo = np.array([system.box(c)[0] for c in coords])
    hi = np.array([system.box(c)[1] for c in coords])
    guards = [(g, ex.compile_expr(g.expr)) for g in system.guards]
    points = []
    for _ in range(count):
        for _attempt in range(MAX_REJECTIONS + 1):
            x = dict(zip(coords, (float(v) for v in rng.uniform(lo, hi))))
            b = system.binding(x)
            if all(g.holds(fn(b)) for g, fn in guards):
                break
        else:
            raise SamplingExhausted(
                f"{system.name}: no point satisfied the guards after {MAX_REJECTIONS} rejections")
        points.append(SamplePoint(x, constants_at(system, x)))
    return points


def batch_binding(system: MotionSystem, points: list[SamplePoint]) -> dict:
    """One binding whose coordinate values are arrays over the points."""
    coords = system.phase_space.coordinates
    arrays = {c: np.array([p.coords[c] for p in points]) for c in coords}
    return system.binding(arrays)
