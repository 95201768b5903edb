import math

import numpy as np
import pytest

from varidescent import ExpressionSyntaxError, parse_expression
from varidescent.expressions import UnknownIdentifierError, gradient


def test_poisson_source_value():
    e = parse_expression("2*pi^2*sin(pi*x1)*sin(pi*x2)", n=2)
    assert e(0.5, 0.5) == pytest.approx(2 * math.pi**2, rel=1e-15)


def test_syntax_error_offset():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("x1+")
    assert info.value.position == 3
    assert "offset 3" in str(info.value)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse_expression("x3", n=2)
    with pytest.raises(UnknownIdentifierError):
        parse_expression("tan(x1)")


@pytest.mark.parametrize(
    "src, expected",
    [
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("8/4/2", 1.0),
        ("1-2-3", -4.0),
        ("2*-3", -6.0),
        ("abs(-1.5e1)", 15.0),
        ("exp(log(3))", 3.0),
        ("(1+2)*3", 9.0),
    ],
)
def test_precedence_and_associativity(src, expected):
    assert parse_expression(src)() == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("src", ["", "1 2", "sin", "(1", "1)", "x1 ^", "2 ** 3", "sin()"])
def test_malformed(src):
    with pytest.raises(ExpressionSyntaxError):
        parse_expression(src)


@pytest.mark.parametrize(
    "src",
    ["-x1^2", "x1-(-x2)", "2*pi^2*sin(pi*x1)*sin(pi*x2)", "-(x1+1)/-3", "1e-3*abs(x2)^0.5"],
)
def test_print_round_trip(src):
    e = parse_expression(src, n=2)
    once = parse_expression(e.to_source(), n=2)
    assert once == e
    assert parse_expression(once.to_source(), n=2).to_source() == once.to_source()


def test_vectorised_evaluation():
    e = parse_expression("x1*x2 + 1", n=2)
    x = np.linspace(0, 1, 5)
    np.testing.assert_allclose(e.evaluate([x, 2 * x]), 2 * x * x + 1)


def test_symbolic_gradient_matches_fd():
    e = parse_expression("sin(pi*x1)*exp(x2) + x1^3/x2", n=2)
    grads = gradient(e, 2)
    p = (0.3, 0.7)
    for k, g in enumerate(grads):
        step = [0.0, 0.0]
        step[k] = 1e-6
        fd = (e(p[0] + step[0], p[1] + step[1]) - e(p[0] - step[0], p[1] - step[1])) / 2e-6
        assert g(*p) == pytest.approx(fd, rel=1e-7)
