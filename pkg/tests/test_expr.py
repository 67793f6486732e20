import cmath

import pytest
import sympy
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from nambu_constraints import expr as ex

VARS = ("x", "y", "z")


def leaves():
    return st.one_of(
        st.integers(-3, 3).map(ex.const),
        st.sampled_from([0.5, -1.25, 2.0]).map(ex.const),
        st.sampled_from(VARS).map(ex.Var),
    )


def polynomial_trees():
    def extend(children):
        return st.one_of(
            st.lists(children, min_size=2, max_size=3).map(lambda xs: ex.add(*xs)),
            st.lists(children, min_size=2, max_size=3).map(lambda xs: ex.mul(*xs)),
            st.tuples(children, st.integers(0, 3)).map(lambda t: ex.power(*t)),
            children.map(ex.neg),
        )
    return st.recursive(leaves(), extend, max_leaves=12)


def smooth_trees():
    """Polynomial trees plus quotients and square roots kept away from
    singularities (denominators and radicands of the form 1 + t^2)."""
    def extend(children):
        return st.one_of(
            st.lists(children, min_size=2, max_size=3).map(lambda xs: ex.add(*xs)),
            st.lists(children, min_size=2, max_size=3).map(lambda xs: ex.mul(*xs)),
            st.tuples(children, st.integers(-2, 3)).map(lambda t: ex.power(1 + t[0] ** 2, t[1])),
            st.tuples(children, children).map(lambda t: t[0] / (1 + t[1] ** 2)),
            children.map(lambda c: ex.sqrt(1 + c ** 2)),
            children.map(ex.neg),
        )
    return st.recursive(leaves(), extend, max_leaves=10)


def depth(e):
    kids = e.children()
    return 1 + max((depth(k) for k in kids), default=0)


bindings = st.fixed_dictionaries({v: st.floats(-1.5, 1.5) for v in VARS})


# ---------------------------------------------------------------------------
# parse


def test_parse_identifier():
    assert ex.parse("q1") == ex.Var("q1")


def test_parse_oscillator_energy_matches_hand_built_tree():
    built = ex.add(ex.div(ex.power(ex.Var("p1"), 2), ex.const(2)),
                   ex.div(ex.mul(ex.Var("k"), ex.power(ex.Var("q1"), 2)), ex.const(2)))
    parsed = ex.parse("p1^2/2 + k*q1^2/2")
    for b in ({"p1": 0.3, "q1": -1.1, "k": 2.0}, {"p1": 2.0, "q1": 0.5, "k": 1.0}):
        assert ex.close(ex.evaluate(parsed, b), ex.evaluate(built, b))
    assert ex.free_variables(parsed) == {"p1", "q1", "k"}


def test_parse_reports_position_of_bad_operator():
    with pytest.raises(ex.ParseError) as err:
        ex.parse("q1 +* p1")
    assert (err.value.line, err.value.column) == (1, 5)


@pytest.mark.parametrize("source", ["", "   ", "q1 $ p1", "(q1", "q1)", "sqrt q1", "q1^x", "2q1"])
def test_parse_rejects_malformed_input(source):
    with pytest.raises(ex.ParseError):
        ex.parse(source)


@pytest.mark.parametrize("source, expected", [
    ("-x^2", -4.0),
    ("2^3^2", 512.0),
    ("2^-1", 0.5),
    ("x^(-2)", 0.25),
    ("-x*3", -6.0),
    ("8/2/2", 2.0),
    ("1 - 2 - 3", -4.0),
    ("+x", 2.0),
])
def test_precedence_and_associativity(source, expected):
    assert ex.evaluate(ex.parse(source), {"x": 2.0}) == pytest.approx(expected)


def test_line_numbers_for_multiline_source():
    with pytest.raises(ex.ParseError) as err:
        ex.parse("x +\n  * y")
    assert err.value.line == 2


def test_imaginary_unit_is_reserved():
    with pytest.raises(ex.ExprError):
        ex.var("i")


# ---------------------------------------------------------------------------
# diff


def test_power_rule():
    d = ex.diff(ex.parse("q1^2"), "q1")
    assert ex.close(ex.evaluate(d, {"q1": 1.7}), 3.4)


def test_chain_rule_through_sqrt():
    d = ex.diff(ex.parse("sqrt(q1^2+q2^2)"), "q1")
    want = ex.parse("q1/sqrt(q1^2+q2^2)")
    b = {"q1": 0.6, "q2": -1.3}
    assert ex.close(ex.evaluate(d, b), ex.evaluate(want, b))


def test_product_rule_on_oscillator_constant():
    d = ex.diff(ex.parse("p1*p2 + k*q1*q2"), "q1")
    b = {"p1": 0.1, "p2": 0.2, "q1": 0.3, "q2": 0.7, "k": 1.5}
    assert ex.close(ex.evaluate(d, b), 1.5 * 0.7)


def test_derivative_of_constant_and_absent_variable():
    assert ex.evaluate(ex.diff(ex.const(7), "x"), {}) == 0
    assert ex.evaluate(ex.diff(ex.parse("y^3"), "x"), {"y": 2.0}) == 0


def test_quotient_rule_against_sympy():
    src = "(x^2 + 3*y)/(1 + x*y) - sqrt(2 + x^2)*y^-2"
    x, y = sympy.symbols("x y")
    oracle = sympy.diff((x**2 + 3*y)/(1 + x*y) - sympy.sqrt(2 + x**2)*y**-2, x)
    b = {"x": 0.7, "y": -1.2}
    got = ex.evaluate(ex.diff(ex.parse(src), "x"), b)
    assert ex.close(got, complex(oracle.subs({x: 0.7, y: -1.2}).evalf()))


# ---------------------------------------------------------------------------
# evaluate / free variables


def test_evaluate_polynomial():
    assert ex.evaluate(ex.parse("q1^2+1"), {"q1": 2}) == 5


def test_imaginary_literal():
    assert ex.evaluate(ex.parse("i*q1"), {"q1": 3}) == 3j


def test_division_by_zero_raises():
    with pytest.raises(ZeroDivisionError):
        ex.evaluate(ex.parse("1/q2"), {"q2": 0})
    with pytest.raises(ZeroDivisionError):
        ex.compile_expr(ex.parse("1/q2"))({"q2": 0.0})


def test_missing_binding_names_variable():
    with pytest.raises(ex.UnboundVariable) as err:
        ex.evaluate(ex.parse("q1 + p7"), {"q1": 1})
    assert err.value.name == "p7"


def test_sqrt_of_negative_is_principal_root():
    assert ex.close(ex.evaluate(ex.parse("sqrt(x)"), {"x": -4}), 2j)


@pytest.mark.parametrize("source, names", [
    ("q1^2+p1", {"q1", "p1"}),
    ("7", set()),
    ("sqrt(1-(q1^2+q2^2))", {"q1", "q2"}),
])
def test_free_variables(source, names):
    assert ex.free_variables(ex.parse(source)) == names


def test_compiled_matches_recursive_evaluation_on_arrays():
    import numpy as np
    e = ex.parse("sqrt(1 + x^2)*y/(2 + z^2) - (x*y)^3 + i*z")
    xs = np.linspace(-1, 1, 7)
    b = {"x": xs, "y": xs[::-1], "z": 0.5 * xs}
    batch = ex.compile_expr(e)(b)
    for j in range(len(xs)):
        single = ex.evaluate(e, {k: float(v[j]) for k, v in b.items()})
        assert ex.close(batch[j], single, rtol=1e-12)


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(polynomial_trees(), bindings, st.sampled_from(VARS))
def test_derivative_matches_central_difference(e, b, v):
    assume(depth(e) <= 6)
    h = 1e-6
    up, down = dict(b), dict(b)
    up[v] += h
    down[v] -= h
    fd = (ex.evaluate(e, up) - ex.evaluate(e, down)) / (2 * h)
    exact = ex.evaluate(ex.diff(e, v), b)
    scale = max(1.0, abs(exact), abs(ex.evaluate(e, b)))
    assert abs(fd - exact) <= 1e-5 * scale


@settings(max_examples=100, deadline=None)
@given(smooth_trees(), bindings, st.sampled_from(VARS), st.sampled_from(VARS))
def test_mixed_partials_commute(e, b, u, v):
    uv = ex.evaluate(ex.diff(ex.diff(e, u), v), b)
    vu = ex.evaluate(ex.diff(ex.diff(e, v), u), b)
    assert abs(uv - vu) <= 1e-9 * max(1.0, abs(uv), abs(vu))


@settings(max_examples=100, deadline=None)
@given(smooth_trees(), bindings)
def test_print_parse_round_trip(e, b):
    again = ex.parse(ex.to_string(e))
    a, c = ex.evaluate(e, b), ex.evaluate(again, b)
    assert cmath.isfinite(a)
    assert abs(a - c) <= 1e-9 * max(1.0, abs(a))
