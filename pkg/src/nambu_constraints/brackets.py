"""Canonical Poisson and Nambu brackets on a 2n-dimensional phase space.

The Nambu bracket of 2n functions is the Jacobian determinant with
respect to the interleaved Darboux coordinates (q1, p1, ..., qn, pn).
Even-order brackets with fewer arguments are defined through the
recursive Poisson-bracket expansion (``decomposed_bracket``).

All numeric routines accept bindings whose values are scalars or numpy
arrays of a common shape; array bindings are evaluated point-wise in one
pass.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex

Binding = Mapping[str, object]


@dataclass(frozen=True)
class PhaseSpace:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("phase space needs at least one degree of freedom")

    @cached_property
    def coordinates(self) -> tuple[str, ...]:
        return tuple(name for j in range(1, self.n + 1) for name in (f"q{j}", f"p{j}"))

    @property
    def positions(self) -> tuple[str, ...]:
        return self.coordinates[0::2]

    @property
    def momenta(self) -> tuple[str, ...]:
        return self.coordinates[1::2]

    @property
    def dimension(self) -> int:
        return 2 * self.n


class Observable:
    """A named phase-space function with cached partial derivatives."""

    def __init__(self, name: str, body: ex.Expr | str):
        self.name = name
        self.body = ex.as_expr(body)
        self._partials: dict[str, ex.Expr] = {}
        self._compiled: dict[str | None, ex.Compiled] = {}

    def __repr__(self):
        return f"Observable({self.name!r}, {self.body})"

    def partial(self, v: str) -> ex.Expr:
        d = self._partials.get(v)
        if d is None:
            d = self._partials[v] = ex.diff(self.body, v)
        return d

    def _fn(self, v: str | None) -> ex.Compiled:
        fn = self._compiled.get(v)
        if fn is None:
            fn = self._compiled[v] = ex.compile_expr(self.body if v is None else self.partial(v))
        return fn

    def value(self, b: Binding):
        return self._fn(None)(b)

    def partial_value(self, v: str, b: Binding):
        return self._fn(v)(b)

    def gradient(self, variables: Sequence[str], b: Binding) -> np.ndarray:
        """Partials stacked along the last axis."""
        return stack([self.partial_value(v, b) for v in variables])

    def free_variables(self) -> set[str]:
        return ex.free_variables(self.body)


def as_observable(f, name: str | None = None) -> Observable:
    if isinstance(f, Observable):
        return f
    body = ex.as_expr(f)
    return Observable(name or str(body), body)


def stack(values: Sequence, axis: int = -1) -> np.ndarray:
    """Stack scalars and arrays after broadcasting them to a common shape."""
    arrays = np.broadcast_arrays(*[np.asarray(v, dtype=complex) for v in values])
    return np.stack(arrays, axis=axis)


def _result(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x


# ---------------------------------------------------------------------------
# permutations and determinants


def permutation_sign(perm: Sequence[int]) -> int:
    """Parity of ``perm`` relative to its ascending order; 0 on a repeat."""
    perm = list(perm)
    if len(set(perm)) != len(perm):
        return 0
    inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
    return -1 if inversions % 2 else 1


def determinant(matrix) -> complex | np.ndarray:
    """Determinant by Gaussian elimination with partial pivoting.

    ``matrix`` has shape (..., k, k); leading axes are a batch.
    """
    a = np.array(matrix, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError("determinant needs square matrices")
    k = a.shape[-1]
    batch_shape = a.shape[:-2]
    a = a.reshape(-1, k, k)
    det = np.ones(a.shape[0], dtype=complex)
    rows = np.arange(a.shape[0])
    for c in range(k):
        pivot = c + np.argmax(np.abs(a[:, c:, c]), axis=1)
        swapped = pivot != c
        if swapped.any():
            top = a[rows, c].copy()
            a[rows, c] = a[rows, pivot]
            a[rows, pivot] = top
            det[swapped] = -det[swapped]
        p = a[:, c, c]
        det *= p
        if c + 1 == k:
            break
        safe = np.where(p == 0, 1, p)
        factors = np.where(p[:, None] == 0, 0, a[:, c + 1:, c] / safe[:, None])
        a[:, c + 1:, c:] -= factors[:, :, None] * a[:, None, c, c:]
    return _result(det.reshape(batch_shape))


def levi_civita_determinant(matrix) -> complex | np.ndarray:
    """Determinant as the full permutation sum.  Only meant as an
    independent cross-check for small k."""
    a = np.asarray(matrix, dtype=complex)
    k = a.shape[-1]
    if k > 4:
        raise ValueError("permutation expansion is limited to k <= 4")
    total = np.zeros(a.shape[:-2], dtype=complex)
    for perm in itertools.permutations(range(k)):
        term = np.ones(a.shape[:-2], dtype=complex) * permutation_sign(perm)
        for row, col in enumerate(perm):
            term = term * a[..., row, col]
        total = total + term
    return _result(total)


# ---------------------------------------------------------------------------
# brackets


def jacobian_matrix(fs: Sequence, variables: Sequence[str], b: Binding) -> np.ndarray:
    obs = [as_observable(f) for f in fs]
    return stack([f.gradient(variables, b) for f in obs], axis=-2)


def jacobian_value(fs: Sequence, variables: Sequence[str], b: Binding):
    if len(fs) != len(variables):
        raise ValueError(f"Jacobian needs as many functions as variables ({len(fs)} vs {len(variables)})")
    return determinant(jacobian_matrix(fs, variables, b))


def poisson(f, g, b: Binding, ps: PhaseSpace):
    f, g = as_observable(f), as_observable(g)
    total = 0
    for q, p in zip(ps.positions, ps.momenta):
        total = total + (f.partial_value(q, b) * g.partial_value(p, b)
                         - f.partial_value(p, b) * g.partial_value(q, b))
    return _result(np.asarray(total, dtype=complex))


def nambu(fs: Sequence, b: Binding, ps: PhaseSpace):
    if len(fs) != ps.dimension:
        raise ValueError(f"a canonical Nambu bracket on {ps.dimension}D phase space takes "
                         f"{ps.dimension} arguments, got {len(fs)}")
    return jacobian_value(fs, ps.coordinates, b)


def pb_matrix_from_gradients(grad: np.ndarray) -> np.ndarray:
    """Matrix of mutual Poisson brackets from stacked gradients (..., k, 2n)."""
    gq, gp = grad[..., 0::2], grad[..., 1::2]
    return gq @ np.swapaxes(gp, -1, -2) - gp @ np.swapaxes(gq, -1, -2)


def pb_matrix(fs: Sequence, b: Binding, ps: PhaseSpace) -> np.ndarray:
    return pb_matrix_from_gradients(jacobian_matrix(fs, ps.coordinates, b))


def cyclic_expansion(m: np.ndarray, indices: Sequence[int] | None = None):
    """Recursive cyclic-sum expansion over a matrix of Poisson brackets.

    For (a1, ..., a2k): sum over the 2k-1 cyclic shifts of (a2, ..., a2k) of
    m[a1, head] times the expansion of the remaining 2k-2 entries, kept in
    their shifted cyclic order.
    """
    if indices is None:
        indices = range(m.shape[-1])
    indices = tuple(indices)
    if len(indices) % 2:
        raise ValueError("cyclic expansion needs an even number of entries")
    if not indices:
        return np.ones(m.shape[:-2], dtype=complex)
    first, tail = indices[0], indices[1:]
    if len(tail) == 1:
        return m[..., first, tail[0]]
    total = 0
    for shift in range(len(tail)):
        rotated = tail[shift:] + tail[:shift]
        total = total + m[..., first, rotated[0]] * cyclic_expansion(m, rotated[1:])
    return total


def decomposed_bracket(fs: Sequence, b: Binding, ps: PhaseSpace):
    k2 = len(fs)
    if k2 % 2 or k2 == 0:
        raise ValueError(f"decomposed bracket takes an even number of arguments, got {k2}")
    if k2 > ps.dimension:
        raise ValueError(f"at most {ps.dimension} arguments on this phase space")
    if k2 == 2:
        return poisson(fs[0], fs[1], b, ps)
    return _result(cyclic_expansion(pb_matrix(fs, b, ps)))


# ---------------------------------------------------------------------------
# symbolic forms


def jacobian_expr(fs: Sequence, variables: Sequence[str]) -> ex.Expr:
    """Jacobian as an expression via the permutation sum (small k only)."""
    obs = [as_observable(f) for f in fs]
    k = len(obs)
    if k != len(variables):
        raise ValueError("Jacobian needs as many functions as variables")
    terms = []
    for perm in itertools.permutations(range(k)):
        factors = [obs[r].partial(variables[c]) for r, c in enumerate(perm)]
        terms.append(ex.mul(ex.const(permutation_sign(perm)), *factors))
    return ex.add(*terms)


def poisson_expr(f, g, ps: PhaseSpace) -> ex.Expr:
    f, g = as_observable(f), as_observable(g)
    terms = []
    for q, p in zip(ps.positions, ps.momenta):
        terms.append(f.partial(q) * g.partial(p) - f.partial(p) * g.partial(q))
    return ex.add(*terms)


def time_derivative(f, hamiltonian, b: Binding, ps: PhaseSpace):
    """df/dt = {f, H}."""
    return poisson(f, hamiltonian, b, ps)


def coordinate_observables(ps: PhaseSpace) -> list[Observable]:
    return [Observable(c, ex.Var(c)) for c in ps.coordinates]
