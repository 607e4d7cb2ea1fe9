import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturmcomp.expr import ParseError, UnboundNameError, parse_expr


def test_parameter_binding():
    assert parse_expr("k - 1 - x", {"k": 1.672})(0.0) == pytest.approx(0.672, abs=1e-15)


def test_constant_zero():
    e = parse_expr("0")
    assert not e.depends_on_x()
    assert np.all(e(np.linspace(0, 1, 5)) == 0)


def test_step_definition():
    e = parse_expr("step(x-0.5)*4")
    assert e(0.25) == 0
    assert e(0.75) == 4
    assert e(0.5) == 4  # step(0) = 1


@pytest.mark.parametrize(
    "text, expected",
    [
        ("2^3^2", 2.0**9),
        ("-2^2", -4.0),
        ("2*3+4", 10.0),
        ("2+3*4", 14.0),
        ("8/4/2", 1.0),
        ("10-4-3", 3.0),
        ("(1+2)*3", 9.0),
        ("2^-1", 0.5),
        ("pi", math.pi),
        ("exp(log(3))", 3.0),
        ("sqrt(abs(-16))", 4.0),
    ],
)
def test_precedence(text, expected):
    assert parse_expr(text)(0.0) == pytest.approx(expected, rel=1e-15)


def test_vectorised():
    xs = np.linspace(0, 1, 7)
    np.testing.assert_allclose(parse_expr("sin(x)^2 + cos(x)^2")(xs), 1.0, rtol=1e-15)


def test_unbound_name():
    with pytest.raises(UnboundNameError) as exc:
        parse_expr("k*x")
    assert exc.value.offset == 0


def test_syntax_error_offset():
    with pytest.raises(ParseError) as exc:
        parse_expr("x + é")
    assert exc.value.offset == 4
    with pytest.raises(ParseError) as exc:
        parse_expr("(x + 1")
    assert exc.value.offset == 6


@pytest.mark.parametrize("text", ["", "1 +", "(x", "x x", "sin", "foo(x)", "1..2", "x $ 2"])
def test_syntax_errors(text):
    with pytest.raises(ParseError):
        parse_expr(text, {"foo": 1.0})


leaf = st.one_of(st.just("x"), st.floats(0.1, 9, allow_nan=False).map(lambda v: repr(round(v, 3))))


def _combine(children):
    return st.tuples(children, st.sampled_from("+-*/"), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})")


@settings(max_examples=60, deadline=None)
@given(st.recursive(leaf, _combine, max_leaves=8))
def test_text_round_trip(text):
    e = parse_expr(text)
    again = parse_expr(str(e))
    xs = np.array([0.3, 1.7, 2.9])
    with np.errstate(all="ignore"):
        np.testing.assert_array_equal(e(xs), again(xs))
