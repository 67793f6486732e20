"""Normalization constants of canonical Nambu brackets from constraint
functionals.

A family of m constants of motion on a 2n-dimensional phase space with
2n-1 functionally independent members carries s = m - (2n-1) functional
relations F_j(C_1, ..., C_m) = 0.  For a selection of 2n-1 constants the
bracket {f, C_sel} equals a signed Jacobian of the F_j with respect to the
complementary constants, times df/dt.  The sign is the parity of
(selection, complement) as a permutation of the family order.

The F_j live on constants-of-motion space: their partial derivatives are
taken symbolically in the C-symbols and only then evaluated at the values
C_i(x) of a phase point.  Differentiating F_j(C(x)) in phase space would
give zero.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from . import polynomial as poly
from .brackets import (
    Binding,
    Observable,
    PhaseSpace,
    as_observable,
    cyclic_expansion,
    determinant,
    pb_matrix_from_gradients,
    permutation_sign,
    stack,
)


class ConstraintError(Exception):
    pass


class IncompatiblePartials(ConstraintError):
    """The prescribed partial derivatives are not those of any function."""

    def __init__(self, u: str, v: str, difference: poly.Polynomial):
        super().__init__(
            f"partials for {u} and {v} are incompatible: d(dF/d{u})/d{v} - d(dF/d{v})/d{u} "
            f"= {difference.to_expr()}"
        )
        self.pair = (u, v)


def scaled_residual(lhs, rhs, atol: float = 0.0):
    """|lhs - rhs| / max(1, |lhs|, |rhs|), with an absolute dead band."""
    lhs = np.asarray(lhs, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    diff = np.maximum(np.abs(lhs - rhs) - atol, 0.0)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    out = diff / scale
    return float(out) if out.ndim == 0 else out


@dataclass
class ConstantFamily:
    """Ordered constants of motion plus the Hamiltonian driving df/dt.

    ``hamiltonian_index`` points into ``members`` when the Hamiltonian is
    one of them; it is None for families that leave it out.
    """

    members: tuple[Observable, ...]
    hamiltonian: Observable
    phase_space: PhaseSpace
    hamiltonian_index: int | None = None

    def __post_init__(self):
        self.members = tuple(self.members)
        if len(set(self.names)) != len(self.names):
            raise ConstraintError("constant names must be distinct")

    @property
    def m(self) -> int:
        return len(self.members)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.members)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConstraintError(f"no constant named {name!r}") from None

    def values(self, b: Binding) -> dict:
        """C-values at the phase point(s) of ``b``; parameters pass through."""
        out = dict(b)
        for c in self.members:
            out[c.name] = np.asarray(c.value(b), dtype=complex) + 0 * _shape_probe(b)
        return out

    def gradients(self, b: Binding) -> np.ndarray:
        """(..., m, 2n) matrix of phase-space partials."""
        coords = self.phase_space.coordinates
        return stack([c.gradient(coords, b) for c in self.members], axis=-2)

    def at(self, b: Binding) -> "FamilyPoint":
        if isinstance(b, FamilyPoint):
            return b
        return FamilyPoint(self, b)


def _shape_probe(b: Binding):
    """Zero array with the batch shape of the binding (for broadcasting)."""
    for v in b.values():
        if np.ndim(v):
            return np.zeros(np.shape(v))
    return 0.0


class FamilyPoint:
    """Everything the bracket identities need at a batch of phase points,
    computed once: C-values, gradients of the constants, gradient of H."""

    def __init__(self, family: ConstantFamily, b: Binding):
        self.family = family
        self.binding = b
        coords = family.phase_space.coordinates
        self.gradients = family.gradients(b)
        self.c_values = family.values(b)
        self.h_gradient = family.hamiltonian.gradient(coords, b)
        self.batch_shape = self.gradients.shape[:-2]
        self._dfdc: dict[int, np.ndarray] = {}
        self._minors: dict[tuple, object] = {}

    def constraint_matrix(self, cs: "ConstraintSet") -> np.ndarray:
        """(..., s, m) matrix dF_j/dC_i at this point's C-values."""
        key = id(cs)
        if key not in self._dfdc:
            m = cs.jacobian_matrix(range(cs.s), self.family.names, self.c_values)
            self._dfdc[key] = np.broadcast_to(m, self.batch_shape + m.shape[-2:])
        return self._dfdc[key]

    def minor(self, cs: "ConstraintSet", rows: Sequence[int], cols: Sequence[int]):
        key = (id(cs), tuple(rows), tuple(cols))
        if key not in self._minors:
            if not rows:
                self._minors[key] = np.ones(self.batch_shape, dtype=complex)
            else:
                sub = self.constraint_matrix(cs)[..., list(rows), :][..., list(cols)]
                self._minors[key] = np.asarray(determinant(sub))
        return self._minors[key]

    def hamiltonian_flow(self) -> np.ndarray:
        """Components of dx/dt = {x, H}: (dH/dp_j, -dH/dq_j) interleaved."""
        g = self.h_gradient
        flow = np.empty_like(g)
        flow[..., 0::2] = g[..., 1::2]
        flow[..., 1::2] = -g[..., 0::2]
        return flow

    def fdot(self, f_gradient: np.ndarray):
        """{f, H} from the gradient of f."""
        return np.sum(f_gradient * self.hamiltonian_flow(), axis=-1)

    def nambu(self, f_gradient: np.ndarray, indices: Sequence[int]):
        """{f, C_i1, ..., C_i(2n-1)} for an ordered index tuple."""
        rows = self.gradients[..., list(indices), :]
        f_gradient = np.broadcast_to(f_gradient, rows.shape[:-2] + rows.shape[-1:])
        return determinant(np.concatenate([f_gradient[..., None, :], rows], axis=-2))

    def nambu_coordinates(self, indices: Sequence[int]) -> np.ndarray:
        """{x, C_i1, ..., C_i(2n-1)} for every coordinate x at once,
        stacked along a new leading axis."""
        rows = self.gradients[..., list(indices), :]
        dim = rows.shape[-1]
        batch = rows.shape[:-2]
        unit = np.eye(dim).reshape((dim,) + (1,) * len(batch) + (1, dim))
        unit = np.broadcast_to(unit, (dim,) + batch + (1, dim))
        rows = np.broadcast_to(rows, (dim,) + rows.shape)
        return np.asarray(determinant(np.concatenate([unit, rows], axis=-2)))

    def pb_matrix(self, indices: Sequence[int]) -> np.ndarray:
        return pb_matrix_from_gradients(self.gradients[..., list(indices), :])

    def coordinate_gradient(self, coordinate: str) -> np.ndarray:
        coords = self.family.phase_space.coordinates
        g = np.zeros(len(coords))
        g[coords.index(coordinate)] = 1.0
        return g


@dataclass
class ConstraintSet:
    """Constraint functionals F_1..F_s written over the C-symbols."""

    label: str
    functionals: tuple[tuple[str, ex.Expr], ...]
    _compiled: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.functionals = tuple((name, ex.as_expr(body)) for name, body in self.functionals)

    @property
    def s(self) -> int:
        return len(self.functionals)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.functionals)

    def row(self, r) -> int:
        if isinstance(r, str):
            try:
                return self.names.index(r)
            except ValueError:
                raise ConstraintError(f"constraint set {self.label!r} has no {r!r}") from None
        return int(r)

    def body(self, r) -> ex.Expr:
        return self.functionals[self.row(r)][1]

    def partial(self, r, c_name: str) -> ex.Expr:
        return ex.diff(self.body(r), c_name)

    def _fn(self, r: int, c_name: str | None) -> ex.Compiled:
        key = (r, c_name)
        fn = self._compiled.get(key)
        if fn is None:
            body = self.body(r)
            fn = self._compiled[key] = ex.compile_expr(body if c_name is None else ex.diff(body, c_name))
        return fn

    def value(self, r, c_values: Binding):
        return self._fn(self.row(r), None)(c_values)

    def jacobian_matrix(self, rows: Sequence, cols: Sequence[str], c_values: Binding) -> np.ndarray:
        return stack([stack([self._fn(self.row(r), c)(c_values) for c in cols])
                      for r in rows], axis=-2)

    def support(self, r) -> set[str]:
        return ex.free_variables(self.body(r))


@dataclass(frozen=True)
class IndexSelection:
    """Ascending choice of 2n-1 constants (0-based indices into the family)."""

    indices: tuple[int, ...]
    m: int

    def __post_init__(self):
        idx = tuple(self.indices)
        if list(idx) != sorted(set(idx)):
            raise ConstraintError(f"selection {idx} must be strictly ascending")
        if idx and (idx[0] < 0 or idx[-1] >= self.m):
            raise ConstraintError(f"selection {idx} out of range for {self.m} constants")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_names(cls, family: ConstantFamily, names: Sequence[str]) -> "IndexSelection":
        return cls(tuple(sorted(family.index(n) for n in names)), family.m)

    @property
    def complement(self) -> tuple[int, ...]:
        chosen = set(self.indices)
        return tuple(i for i in range(self.m) if i not in chosen)

    @property
    def sign(self) -> int:
        return permutation_sign(self.indices + self.complement)

    def names(self, family: ConstantFamily) -> tuple[str, ...]:
        return tuple(family.names[i] for i in self.indices)


@dataclass(frozen=True)
class NormalizationConstant:
    expr: ex.Expr
    sign: int
    selection: IndexSelection

    def value(self, c_values: Binding):
        return np.asarray(ex.compile_expr(self.expr)(c_values), dtype=complex)


def _det_expr(entries: list[list[ex.Expr]]) -> ex.Expr:
    k = len(entries)
    if k == 0:
        return ex.ONE
    terms = []
    for perm in itertools.permutations(range(k)):
        factors = [entries[r][c] for r, c in enumerate(perm)]
        terms.append(ex.mul(ex.const(permutation_sign(perm)), *factors))
    return ex.add(*terms)


def _result(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x


def _col_names(family_or_none, cols) -> list[str]:
    if family_or_none is None:
        return [str(c) for c in cols]
    return [family_or_none.names[c] if isinstance(c, (int, np.integer)) else c for c in cols]


# ---------------------------------------------------------------------------
# operations


def constraint_jacobian(cs: ConstraintSet, rows: Sequence, cols: Sequence[str], c_values: Binding):
    """det[dF_row / dC_col] evaluated at the given C-values."""
    if len(rows) != len(cols):
        raise ConstraintError(f"need as many rows as columns ({len(rows)} vs {len(cols)})")
    if not rows:
        return 1 + 0j
    return determinant(cs.jacobian_matrix(rows, cols, c_values))


def levi_civita_coefficient(fam: ConstantFamily, cs: ConstraintSet, ordered: Sequence[int], b: Binding,
                            rows: Sequence | None = None):
    """Signed Jacobian attached to an ordered (possibly unsorted) index
    tuple: parity of (ordered, complement) times det dF/dC_complement.
    Zero when the tuple repeats an index."""
    ordered = tuple(ordered)
    if len(set(ordered)) != len(ordered):
        point = fam.at(b)
        return _result(np.zeros(point.batch_shape, dtype=complex))
    chosen = set(ordered)
    complement = tuple(i for i in range(fam.m) if i not in chosen)
    rows = tuple(range(cs.s)) if rows is None else tuple(cs.row(r) for r in rows)
    if len(rows) != len(complement):
        raise ConstraintError(f"{len(rows)} constraint rows against {len(complement)} complementary constants")
    sign = permutation_sign(ordered + complement)
    return _result(sign * fam.at(b).minor(cs, rows, complement))


def normalization_constant(fam: ConstantFamily, cs: ConstraintSet, sel: IndexSelection, b: Binding):
    if len(sel.complement) != cs.s:
        raise ConstraintError(
            f"{cs.s} constraints but {len(sel.complement)} complementary constants; "
            f"a family of {fam.m} needs s = {fam.m - (2 * fam.phase_space.n - 1)}")
    return levi_civita_coefficient(fam, cs, sel.indices, b)


def normalization_expr(fam: ConstantFamily, cs: ConstraintSet, sel: IndexSelection) -> NormalizationConstant:
    """Closed form of the normalization constant over the C-symbols."""
    cols = _col_names(fam, sel.complement)
    entries = [[cs.partial(r, c) for c in cols] for r in range(cs.s)]
    return NormalizationConstant(ex.mul(ex.const(sel.sign), _det_expr(entries)), sel.sign, sel)


def _f_gradient(point: FamilyPoint, f) -> np.ndarray:
    if isinstance(f, str) and f in point.family.phase_space.coordinates:
        return point.coordinate_gradient(f)
    obs = as_observable(f)
    return obs.gradient(point.family.phase_space.coordinates, point.binding)


def final_sides(fam: ConstantFamily, cs: ConstraintSet, sel: IndexSelection | Sequence[int], f, b: Binding):
    """(bracket, normalization * df/dt) for an ordered selection."""
    point = fam.at(b)
    indices = sel.indices if isinstance(sel, IndexSelection) else tuple(sel)
    fg = _f_gradient(point, f)
    lhs = point.nambu(fg, indices)
    coeff = levi_civita_coefficient(fam, cs, indices, point)
    return lhs, np.asarray(coeff) * point.fdot(fg)


def final_sides_coordinates(fam: ConstantFamily, cs: ConstraintSet, sel: IndexSelection | Sequence[int],
                            b: Binding):
    """final_sides for f running over every phase coordinate; the
    coordinate is the leading axis of both results."""
    point = fam.at(b)
    indices = sel.indices if isinstance(sel, IndexSelection) else tuple(sel)
    lhs = point.nambu_coordinates(indices)
    coeff = levi_civita_coefficient(fam, cs, indices, point)
    flow = np.moveaxis(point.hamiltonian_flow(), -1, 0)
    return lhs, np.asarray(coeff) * flow


def verify_final(fam: ConstantFamily, cs: ConstraintSet, sel, f, b: Binding, atol: float = 0.0):
    """Scale-aware residual of {f, C_sel} = normalization * {f, H}."""
    lhs, rhs = final_sides(fam, cs, sel, f, b)
    return scaled_residual(lhs, rhs, atol)


def homogeneous_terms(fam: ConstantFamily, cs: ConstraintSet, arbitrary: Sequence[int], b: Binding,
                      rows: Sequence | None = None, f=None) -> list:
    """Terms of  sum_I det(dF_rows/dC_I) * C_(I, arbitrary)  over ascending I.

    Without ``f`` the unknowns C_(...) are the signed-Jacobian solution;
    with ``f`` each C_(...) * df/dt is replaced by the actual bracket
    {f, C_I, C_arbitrary}.
    """
    point = fam.at(b)
    n2 = 2 * fam.phase_space.n
    rows = tuple(range(cs.s)) if rows is None else tuple(cs.row(r) for r in rows)
    arbitrary = tuple(arbitrary)
    if len(rows) + len(arbitrary) != n2 - 1:
        raise ConstraintError(
            f"{len(rows)} constraint rows and {len(arbitrary)} arbitrary constants do not fill "
            f"{n2 - 1} bracket slots")
    if len(set(arbitrary)) != len(arbitrary):
        raise ConstraintError("arbitrary indices must be distinct")
    fg = None if f is None else _f_gradient(point, f)
    free = [i for i in range(fam.m) if i not in set(arbitrary)]
    terms = []
    for chosen in itertools.combinations(free, len(rows)):
        minor = point.minor(cs, rows, chosen)
        if fg is None:
            coeff = levi_civita_coefficient(fam, cs, chosen + arbitrary, point)
        else:
            coeff = point.nambu(fg, chosen + arbitrary)
        terms.append(np.asarray(minor) * np.asarray(coeff))
    return terms


def homogeneous_residual(fam: ConstantFamily, cs: ConstraintSet, arbitrary: Sequence[int], b: Binding,
                         rows: Sequence | None = None, f=None):
    """Absolute value of the homogeneous sum; it should vanish."""
    terms = homogeneous_terms(fam, cs, arbitrary, b, rows, f)
    if not terms:
        return 0.0
    return _result(np.abs(sum(terms)))


def corollary_sides(fam: ConstantFamily, cs: ConstraintSet, sel2: Sequence[int], b: Binding):
    """(bracket of 2n-2 constants, signed constraint Jacobian) with the
    Hamiltonian index k put first: parity of (k, sel2, rest)."""
    k = fam.hamiltonian_index
    if k is None:
        raise ConstraintError("the corollary needs the Hamiltonian inside the family")
    sel2 = tuple(sel2)
    if k in sel2:
        raise ConstraintError("the Hamiltonian must not be among the selected constants")
    if len(sel2) != 2 * fam.phase_space.n - 2:
        raise ConstraintError(f"the corollary takes {2 * fam.phase_space.n - 2} constants")
    point = fam.at(b)
    lhs = cyclic_expansion(point.pb_matrix(sel2))
    rhs = levi_civita_coefficient(fam, cs, (k,) + sel2, point)
    return _result(lhs), rhs


def verify_corollary(fam: ConstantFamily, cs: ConstraintSet, sel2: Sequence[int], b: Binding,
                     atol: float = 0.0):
    lhs, rhs = corollary_sides(fam, cs, sel2, b)
    return scaled_residual(lhs, rhs, atol)


# ---------------------------------------------------------------------------
# reconstruction


def reconstruct_constraint(partials: Mapping[str, ex.Expr], gauge_point: Mapping[str, complex] | None = None,
                           atol: float = 1e-12) -> ex.Expr:
    """Find F with dF/dC_k = partials[C_k] for every given C_k.

    Right-hand sides must be polynomial.  Symbols without a prescribed
    partial (other constants, parameters) are carried along as
    coefficients.  The additive freedom is fixed by F(gauge_point) = 0;
    the default gauge is the origin of the integrated symbols.
    """
    polys = {}
    for name, rhs in partials.items():
        polys[name] = poly.from_expr(ex.as_expr(rhs))
    names = list(polys)
    for u, v in itertools.combinations(names, 2):
        difference = polys[u].diff(v) - polys[v].diff(u)
        if difference.max_abs_coefficient() > atol:
            raise IncompatiblePartials(u, v, difference)
    potential = poly.integrate_closed_form(polys, names)
    if gauge_point:
        stray = set(gauge_point) - set(names)
        if stray:
            raise ConstraintError(f"gauge point fixes {sorted(stray)}, which have no prescribed partial")
        # unspecified integrated symbols sit at 0, so only the constant shifts
        point = {name: 0 for name in names}
        point.update(gauge_point)
        potential = potential - potential.subs(point)
    return potential.to_expr()


def partial_mismatch(target: ex.Expr, partials: Mapping[str, ex.Expr]) -> float:
    """Largest coefficient of dTarget/dC_k - partials[C_k] after expansion."""
    worst = 0.0
    for name, rhs in partials.items():
        d = poly.from_expr(ex.diff(target, name)) - poly.from_expr(ex.as_expr(rhs))
        worst = max(worst, d.max_abs_coefficient())
    return worst
