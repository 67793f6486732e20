"""Sparse multivariate polynomials with complex coefficients.

Only what reconstruction needs: expansion of an expression tree, partial
derivatives, integration of a closed one-form, and conversion back.
"""
from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Mapping

from . import expr as ex

Monomial = tuple[tuple[str, int], ...]


class NotPolynomial(ex.ExprError):
    pass


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    powers = dict(a)
    for name, k in b:
        powers[name] = powers.get(name, 0) + k
    return tuple(sorted(powers.items()))


class Polynomial:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, complex] | None = None):
        self.terms: dict[Monomial, complex] = {m: c for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls({(): complex(c)})

    @classmethod
    def variable(cls, name: str) -> "Polynomial":
        return cls({((name, 1),): 1 + 0j})

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = defaultdict(complex, self.terms)
        for m, c in other.terms.items():
            out[m] += c
        return Polynomial(out)

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        out: dict[Monomial, complex] = defaultdict(complex)
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                out[_mono_mul(ma, mb)] += ca * cb
        return Polynomial(out)

    def scale(self, c: complex) -> "Polynomial":
        return Polynomial({m: c * v for m, v in self.terms.items()})

    def __pow__(self, n: int) -> "Polynomial":
        result = Polynomial.constant(1)
        for _ in range(n):
            result = result * self
        return result

    def variables(self) -> set[str]:
        return {name for m in self.terms for name, _ in m}

    def diff(self, name: str) -> "Polynomial":
        out: dict[Monomial, complex] = defaultdict(complex)
        for m, c in self.terms.items():
            powers = dict(m)
            k = powers.get(name, 0)
            if k == 0:
                continue
            if k == 1:
                del powers[name]
            else:
                powers[name] = k - 1
            out[tuple(sorted(powers.items()))] += c * k
        return Polynomial(out)

    def subs(self, values: Mapping[str, complex]) -> "Polynomial":
        """Partially evaluate: bound names become numbers, the rest stay symbolic."""
        out: dict[Monomial, complex] = defaultdict(complex)
        for m, c in self.terms.items():
            rest = []
            for name, k in m:
                if name in values:
                    c = c * complex(values[name]) ** k
                else:
                    rest.append((name, k))
            out[tuple(rest)] += c
        return Polynomial(out)

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_close(self, other: "Polynomial", atol: float = 1e-12) -> bool:
        return (self - other).max_abs_coefficient() <= atol

    def to_expr(self) -> ex.Expr:
        terms = []
        for m, c in sorted(self.terms.items()):
            factors = [ex.power(ex.Var(name), k) for name, k in m]
            terms.append(ex.mul(ex.Const(c), *factors))
        return ex.add(*terms)

    def __repr__(self):
        return f"Polynomial({self.to_expr()})"


def from_expr(e: ex.Expr) -> Polynomial:
    """Expand an expression tree.  Raises NotPolynomial on radicals or
    division by anything but a constant."""
    if isinstance(e, ex.Const):
        return Polynomial.constant(e.value)
    if isinstance(e, ex.Var):
        return Polynomial.variable(e.name)
    if isinstance(e, ex.Add):
        out = Polynomial()
        for t in e.terms:
            out = out + from_expr(t)
        return out
    if isinstance(e, ex.Mul):
        out = Polynomial.constant(1)
        for f in e.factors:
            out = out * from_expr(f)
        return out
    if isinstance(e, ex.Neg):
        return -from_expr(e.child)
    if isinstance(e, ex.Pow):
        if e.exponent < 0:
            raise NotPolynomial(f"negative power in {e}")
        return from_expr(e.base) ** e.exponent
    if isinstance(e, ex.Div):
        den = from_expr(e.denominator)
        if set(den.terms) - {()}:
            raise NotPolynomial(f"division by a non-constant in {e}")
        c = den.terms.get((), 0)
        if c == 0:
            raise ZeroDivisionError(f"division by zero in {e}")
        return from_expr(e.numerator).scale(1 / c)
    if isinstance(e, ex.Sqrt):
        raise NotPolynomial(f"square root in {e}")
    raise TypeError(type(e))


def integrate_closed_form(partials: Mapping[str, Polynomial], over: Iterable[str]) -> Polynomial:
    """Potential of the one-form sum_k partials[k] dk, built with the radial
    homotopy about the origin of the ``over`` variables.

    Closedness is the caller's responsibility; for a closed form the result
    has exactly the given partials and vanishes at the origin.
    """
    over = set(over)
    out: dict[Monomial, complex] = defaultdict(complex)
    for name, poly in partials.items():
        for m, c in poly.terms.items():
            degree = sum(k for v, k in m if v in over)
            out[_mono_mul(m, ((name, 1),))] += c / (degree + 1)
    return Polynomial(out)
