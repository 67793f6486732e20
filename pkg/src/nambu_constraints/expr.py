"""Immutable expression trees over named variables.

Expressions are built with the smart constructors below (or the overloaded
Python operators) and only ever simplified locally: constant folding,
zero/one elimination and flattening of sums and products.  Nothing here
tries to reach a canonical form; two equal functions may well print
differently.

Values are complex throughout.  ``evaluate`` is the plain recursive
evaluator; ``compile_expr`` produces a vectorised callable that accepts
numpy arrays in the binding and is what the bracket machinery uses.
"""
from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

IMAGINARY_UNIT = "i"
RESERVED = frozenset({IMAGINARY_UNIT, "sqrt"})


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class UnboundVariable(ExprError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"no value bound for variable {self.name!r}"


# precedence levels used by the printer
_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        if not isinstance(exponent, int):
            raise TypeError("only integer powers are supported; use sqrt() for radicals")
        return power(self, exponent)

    def __str__(self):
        return _print(self)

    def children(self) -> tuple["Expr", ...]:
        return ()


@dataclass(frozen=True, eq=True, slots=True)
class Const(Expr):
    value: complex

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, eq=True, slots=True)
class Var(Expr):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, eq=True, slots=True)
class Add(Expr):
    terms: tuple[Expr, ...]

    def children(self):
        return self.terms


@dataclass(frozen=True, eq=True, slots=True)
class Mul(Expr):
    factors: tuple[Expr, ...]

    def children(self):
        return self.factors


@dataclass(frozen=True, eq=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def children(self):
        return (self.base,)


@dataclass(frozen=True, eq=True, slots=True)
class Div(Expr):
    numerator: Expr
    denominator: Expr

    def children(self):
        return (self.numerator, self.denominator)


@dataclass(frozen=True, eq=True, slots=True)
class Neg(Expr):
    child: Expr

    def children(self):
        return (self.child,)


@dataclass(frozen=True, eq=True, slots=True)
class Sqrt(Expr):
    child: Expr

    def children(self):
        return (self.child,)


ZERO = Const(0j)
ONE = Const(1 + 0j)


# ---------------------------------------------------------------------------
# constructors


def const(value) -> Const:
    return Const(complex(value))


def var(name: str) -> Var:
    if name in RESERVED:
        raise ExprError(f"{name!r} is reserved and cannot be a variable name")
    return Var(name)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return const(x)
    if isinstance(x, str):
        return parse(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def _is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    total = 0j
    for t in terms:
        for u in t.terms if isinstance(t, Add) else (t,):
            if isinstance(u, Const):
                total += u.value
            else:
                flat.append(u)
    if total != 0:
        flat.append(Const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat: list[Expr] = []
    coeff = 1 + 0j
    for f in factors:
        for u in f.factors if isinstance(f, Mul) else (f,):
            if isinstance(u, Const):
                coeff *= u.value
            elif isinstance(u, Neg):
                coeff = -coeff
                flat.append(u.child)
            else:
                flat.append(u)
    if coeff == 0:
        return ZERO
    if not flat:
        return Const(coeff)
    body = flat[0] if len(flat) == 1 else Mul(tuple(flat))
    if coeff == 1:
        return body
    if coeff == -1:
        return Neg(body)
    if isinstance(body, Mul):
        return Mul((Const(coeff),) + body.factors)
    return Mul((Const(coeff), body))


def neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.child
    return Neg(e)


def div(numerator: Expr, denominator: Expr) -> Expr:
    if _is_const(denominator, 1):
        return numerator
    if isinstance(denominator, Const) and denominator.value != 0:
        if isinstance(numerator, Const):
            return Const(numerator.value / denominator.value)
        return mul(Const(1 / denominator.value), numerator)
    if _is_const(numerator, 0) and not _is_const(denominator, 0):
        return ZERO
    return Div(numerator, denominator)


def power(base: Expr, exponent: int) -> Expr:
    exponent = int(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const) and (base.value != 0 or exponent > 0):
        return Const(base.value**exponent)
    if isinstance(base, Pow):
        return power(base.base, base.exponent * exponent)
    return Pow(base, exponent)


def sqrt(e) -> Expr:
    e = as_expr(e)
    if isinstance(e, Const):
        return Const(cmath.sqrt(e.value))
    return Sqrt(e)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (simultaneously)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return add(*(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Div):
        return div(substitute(e.numerator, mapping), substitute(e.denominator, mapping))
    if isinstance(e, Neg):
        return neg(substitute(e.child, mapping))
    if isinstance(e, Sqrt):
        return sqrt(substitute(e.child, mapping))
    raise TypeError(type(e))


def free_variables(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        else:
            stack.extend(node.children())
    return out


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expr, v: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Add):
        return add(*(diff(t, v) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        for k, f in enumerate(e.factors):
            d = diff(f, v)
            if _is_const(d, 0):
                continue
            terms.append(mul(*e.factors[:k], d, *e.factors[k + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        d = diff(e.base, v)
        if _is_const(d, 0):
            return ZERO
        return mul(Const(complex(e.exponent)), power(e.base, e.exponent - 1), d)
    if isinstance(e, Div):
        du = diff(e.numerator, v)
        dw = diff(e.denominator, v)
        if _is_const(dw, 0):
            return div(du, e.denominator)
        top = add(mul(du, e.denominator), neg(mul(e.numerator, dw)))
        return div(top, power(e.denominator, 2))
    if isinstance(e, Neg):
        return neg(diff(e.child, v))
    if isinstance(e, Sqrt):
        d = diff(e.child, v)
        if _is_const(d, 0):
            return ZERO
        return div(d, mul(Const(2 + 0j), e))
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e: Expr, binding: Mapping[str, complex]) -> complex:
    """Evaluate at a single point.  Raises UnboundVariable or ZeroDivisionError."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return complex(binding[e.name])
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Add):
        return sum((evaluate(t, binding) for t in e.terms), 0j)
    if isinstance(e, Mul):
        out = 1 + 0j
        for f in e.factors:
            out *= evaluate(f, binding)
        return out
    if isinstance(e, Pow):
        base = evaluate(e.base, binding)
        if e.exponent < 0:
            if base == 0:
                raise ZeroDivisionError(f"negative power of zero in {e}")
            return 1 / _int_power(base, -e.exponent)
        return _int_power(base, e.exponent)
    if isinstance(e, Div):
        den = evaluate(e.denominator, binding)
        if den == 0:
            raise ZeroDivisionError(f"division by zero in {e}")
        return evaluate(e.numerator, binding) / den
    if isinstance(e, Neg):
        return -evaluate(e.child, binding)
    if isinstance(e, Sqrt):
        return cmath.sqrt(evaluate(e.child, binding))
    raise TypeError(type(e))


def _int_power(x, n: int):
    result = 1
    while n:
        if n & 1:
            result = result * x
        x = x * x
        n >>= 1
    return result


def _checked_div(a, b):
    if np.any(b == 0):
        raise ZeroDivisionError("division by zero")
    return a / b


def _npow(x, n: int):
    if n < 0:
        return _checked_div(1.0, _int_power(x, -n))
    return _int_power(x, n)


def _nsqrt(x):
    return np.sqrt(np.asarray(x, dtype=complex))


def _lookup(binding, name):
    try:
        return binding[name]
    except KeyError:
        raise UnboundVariable(name) from None


_RUNTIME = {"_div": _checked_div, "_pow": _npow, "_sqrt": _nsqrt, "_get": _lookup}


class Compiled:
    """Straight-line Python code generated from an expression.

    Shared subtrees are emitted once.  Binding values may be scalars or
    numpy arrays of a common shape.
    """

    def __init__(self, e: Expr):
        self.expr = e
        lines: list[str] = []
        names: dict[str, str] = {}
        memo: dict[Expr, str] = {}

        def emit(node: Expr) -> str:
            if isinstance(node, Const):
                v = node.value
                return repr(v.real) if v.imag == 0 else repr(v)
            if isinstance(node, Var):
                if node.name not in names:
                    local = f"v{len(names)}"
                    names[node.name] = local
                    lines.insert(0, f"    {local} = _get(b, {node.name!r})")
                return names[node.name]
            if node in memo:
                return memo[node]
            if isinstance(node, Add):
                code = " + ".join(emit(t) for t in node.terms)
            elif isinstance(node, Mul):
                code = " * ".join(emit(f) for f in node.factors)
            elif isinstance(node, Pow):
                code = f"_pow({emit(node.base)}, {node.exponent})"
            elif isinstance(node, Div):
                code = f"_div({emit(node.numerator)}, {emit(node.denominator)})"
            elif isinstance(node, Neg):
                code = f"-{emit(node.child)}"
            elif isinstance(node, Sqrt):
                code = f"_sqrt({emit(node.child)})"
            else:
                raise TypeError(type(node))
            tmp = f"t{len(memo)}"
            memo[node] = tmp
            lines.append(f"    {tmp} = {code}")
            return tmp

        result = emit(e)
        source = "def _f(b):\n" + "\n".join(lines + [f"    return {result}"]) + "\n"
        namespace = dict(_RUNTIME)
        exec(compile(source, "<expr>", "exec"), namespace)
        self.source = source
        self._fn: Callable = namespace["_f"]

    def __call__(self, binding: Mapping):
        return self._fn(binding)


def compile_expr(e: Expr) -> Compiled:
    return Compiled(e)


def close(a: complex, b: complex, rtol: float = 1e-8, atol: float = 1e-10) -> bool:
    return abs(a - b) <= atol + rtol * max(abs(a), abs(b))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)"
    r"|(?P<newline>\n)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, ident, op, end
    text: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unknown token {source[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("end", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind != "op":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, neg(rhs))
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return power(base, self.exponent())
        return base

    def exponent(self) -> int:
        # integer exponents only; towers associate to the right
        sign = 1
        if self.tok.kind == "op" and self.tok.text == "(":
            self.advance()
            n = self.exponent()
            self.expect(")")
        else:
            if self.tok.kind == "op" and self.tok.text == "-":
                self.advance()
                sign = -1
            if self.tok.kind != "number" or not self.tok.text.isdigit():
                raise self.error("exponent must be an integer")
            n = sign * int(self.advance().text)
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            upper = self.exponent()
            if upper < 0:
                raise self.error("exponent tower must stay integral")
            n = n**upper
        return n

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return const(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text == IMAGINARY_UNIT:
                return Const(1j)
            if tok.text == "sqrt":
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return sqrt(inner)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {tok.text!r}")


def parse(source: str) -> Expr:
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# printing


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _const_text(v: complex) -> tuple[str, int]:
    if v.imag == 0:
        text = _fmt_real(v.real)
        return text, (_UNARY if v.real < 0 else _ATOM)
    if v.real == 0:
        return f"({_fmt_real(v.imag)}*i)", _ATOM
    return f"({_fmt_real(v.real)} + {_fmt_real(v.imag)}*i)", _ATOM


def _negative_real(e: Expr) -> bool:
    return isinstance(e, Const) and e.value.imag == 0 and e.value.real < 0


def _wrap(e: Expr, level: int) -> str:
    text, prec = _render(e)
    return f"({text})" if prec < level else text


def _render(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Var):
        return e.name, _ATOM
    if isinstance(e, Add):
        parts = [_wrap(e.terms[0], _ADD)]
        for t in e.terms[1:]:
            if isinstance(t, Neg):
                parts.append(f" - {_wrap(t.child, _MUL)}")
            elif isinstance(t, Const) and t.value.imag == 0 and t.value.real < 0:
                parts.append(f" - {_fmt_real(-t.value.real)}")
            elif isinstance(t, Mul) and _negative_real(t.factors[0]):
                positive = mul(Const(-t.factors[0].value), *t.factors[1:])
                parts.append(f" - {_wrap(positive, _MUL)}")
            else:
                parts.append(f" + {_wrap(t, _ADD + 1)}")
        return "".join(parts), _ADD
    if isinstance(e, Mul):
        return "*".join(_wrap(f, _UNARY) for f in e.factors), _MUL
    if isinstance(e, Div):
        return f"{_wrap(e.numerator, _MUL)}/{_wrap(e.denominator, _UNARY)}", _MUL
    if isinstance(e, Neg):
        return f"-{_wrap(e.child, _UNARY)}", _UNARY
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _ATOM)}^{e.exponent}", _POW
    if isinstance(e, Sqrt):
        return f"sqrt({_render(e.child)[0]})", _ATOM
    raise TypeError(type(e))


def _print(e: Expr) -> str:
    return _render(e)[0]


def to_string(e: Expr) -> str:
    return _print(e)


def variables(names: Iterable[str]) -> tuple[Var, ...]:
    return tuple(var(n) for n in names)
