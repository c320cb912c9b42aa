"""Small expression language used in run configs and manufactured fields.

Grammar: infix arithmetic with ``+ - * / ^`` (``^`` is exponentiation),
parentheses, decimal numbers, the functions ``exp``, ``sin``, ``cos``,
``tanh``, the constants ``pi`` and ``e``, and a caller-supplied set of
variable names (typically ``u``, ``v`` or ``x``).  Parsed expressions are
sympy trees, so they can be differentiated analytically; evaluation happens
through a cached numpy lambdification with deterministic operation order.
"""

import re

import numpy as np
import sympy as sp

ALLOWED_FUNCTIONS = {
    "exp": sp.exp,
    "sin": sp.sin,
    "cos": sp.cos,
    "tanh": sp.tanh,
}
ALLOWED_CONSTANTS = {"pi": sp.pi, "e": sp.E}

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\*\*|[-+*/^(),]))")


class ExpressionError(ValueError):
    """Raised when an expression string does not fit the grammar."""


def _validate_tokens(text, variables):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionError(
                f"unexpected character {text[pos]!r} at position {pos} in {text!r}"
            )
        name = m.group(2)
        if name is not None and name not in variables \
                and name not in ALLOWED_FUNCTIONS and name not in ALLOWED_CONSTANTS:
            raise ExpressionError(
                f"unknown identifier {name!r} in {text!r} "
                f"(variables here: {', '.join(sorted(variables))})"
            )
        pos = m.end()


def parse_expression(text, variables=("u",)):
    """Parse ``text`` into a sympy expression over the given variable names."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError(f"expected an expression string, got {text!r}")
    _validate_tokens(text, set(variables))
    local = {name: sp.Symbol(name, real=True) for name in variables}
    local.update(ALLOWED_FUNCTIONS)
    local.update(ALLOWED_CONSTANTS)
    try:
        expr = sp.parse_expr(
            text.replace("^", "**"), local_dict=local, evaluate=True
        )
    except (SyntaxError, TypeError, sp.SympifyError) as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from None
    return expr


class ExprFunc:
    """A parsed expression bound to an ordered list of variables.

    Instances are callable on floats or numpy arrays (broadcasting over the
    arguments) and can be differentiated analytically with :meth:`diff`.
    """

    def __init__(self, expr, variables):
        if isinstance(expr, str):
            expr = parse_expression(expr, variables)
        self.variables = tuple(variables)
        self.symbols = tuple(sp.Symbol(v, real=True) for v in self.variables)
        self.expr = sp.sympify(expr)
        extra = self.expr.free_symbols - set(self.symbols)
        if extra:
            raise ExpressionError(
                f"expression {self.expr} uses symbols {sorted(map(str, extra))} "
                f"outside of {self.variables}"
            )
        self._fn = sp.lambdify(self.symbols, self.expr, modules="numpy")

    def __call__(self, *args):
        out = self._fn(*args)
        shape = np.broadcast(*args).shape if args else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy() \
            if shape else float(out)

    def diff(self, variable, n=1):
        return ExprFunc(sp.diff(self.expr, sp.Symbol(variable, real=True), n),
                        self.variables)

    def __repr__(self):
        return f"ExprFunc({self.expr}, vars={self.variables})"
