import numpy as np
import pytest

from auglab.expressions import ExpressionError, ExprFunc, parse_expression


def test_parse_basic_arithmetic():
    f = ExprFunc("2*u + 3", ("u",))
    assert f(1.0) == 5.0
    assert np.allclose(f(np.array([0.0, 1.0, 2.0])), [3.0, 5.0, 7.0])


def test_caret_is_power():
    f = ExprFunc("u^3", ("u",))
    assert f(2.0) == 8.0


def test_functions_and_constants():
    f = ExprFunc("exp(u) + sin(pi*u) + cos(0*u) + tanh(u) - e^0", ("u",))
    x = 0.3
    expected = np.exp(x) + np.sin(np.pi * x) + 1.0 + np.tanh(x) - 1.0
    assert abs(f(x) - expected) < 1e-14


def test_two_variable_expression():
    f = ExprFunc("u*v + v^2", ("u", "v"))
    assert f(2.0, 3.0) == 15.0
    u = np.array([1.0, 2.0])
    v = np.array([0.5, -1.0])
    assert np.allclose(f(u, v), u * v + v**2)


def test_unknown_identifier_is_named():
    with pytest.raises(ExpressionError, match="w"):
        parse_expression("u + w", ("u",))


def test_syntax_error_reported():
    with pytest.raises(ExpressionError):
        parse_expression("v +", ("v",))


def test_disallowed_function_rejected():
    with pytest.raises(ExpressionError, match="sqrt"):
        parse_expression("sqrt(u)", ("u",))


def test_analytic_derivative_matches_finite_difference():
    f = ExprFunc("exp(u)*sin(u) + u^3", ("u",))
    df = f.diff("u")
    u = np.linspace(-1.0, 1.0, 11)
    h = 1e-6
    fd = (f(u + h) - f(u - h)) / (2 * h)
    assert np.max(np.abs(df(u) - fd)) < 1e-8


def test_constant_expression_broadcasts():
    f = ExprFunc("0.5", ("x",))
    out = f(np.zeros(7))
    assert out.shape == (7,)
    assert np.all(out == 0.5)


def test_evaluation_is_deterministic():
    f = ExprFunc("sin(x)*exp(x) + x^2/3", ("x",))
    x = np.linspace(0, 1, 97)
    a = f(x)
    b = f(x)
    assert np.array_equal(a, b)
