"""
Coefficient expression strings.

A deliberately small grammar: numbers, + - * / and powers, parentheses,
sin/cos/exp, the constants pi and e, and the variables t, x, y. Strings are
screened character by character and identifier by identifier before sympy
parses them, then compiled to numpy callables with lambdify.
"""
import logging
import re
from typing import Callable

import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .exceptions import ExpressionError

logger = logging.getLogger(__name__)

T, X, Y = sp.symbols("t x y", real=True)

_NAMES = {
    "t": T,
    "x": X,
    "y": Y,
    "pi": sp.pi,
    "e": sp.E,
    "sin": sp.sin,
    "cos": sp.cos,
    "exp": sp.exp,
}
_PARSER_GLOBALS = {
    "Integer": sp.Integer,
    "Float": sp.Float,
    "Rational": sp.Rational,
    "Symbol": sp.Symbol,
}
_ALLOWED_CHARS = re.compile(r"^[0-9a-z\s.+\-*/()]*$")
_IDENTIFIER = re.compile(r"[a-z_]+")
_ALLOWED_FUNCTIONS = (sp.sin, sp.cos, sp.exp)


def parse_expression(text: str) -> sp.Expr:
    """Parse an expression string into a sympy expression in t, x, y.

    Raises:
        ExpressionError: for characters, names or functions outside the grammar,
            syntax errors, or expressions that are not finite.
    """
    if isinstance(text, (int, float)):
        return sp.Float(text)
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError(f"expected a non-empty expression string, got {text!r}")
    if not _ALLOWED_CHARS.match(text):
        raise ExpressionError(f"illegal character in expression {text!r}")

    unknown = sorted(set(_IDENTIFIER.findall(text)) - set(_NAMES))
    if unknown:
        raise ExpressionError(
            f"unknown name(s) {unknown} in {text!r}; allowed: {sorted(_NAMES)}"
        )

    try:
        expr = parse_expr(
            text,
            local_dict=dict(_NAMES),
            global_dict=dict(_PARSER_GLOBALS),
            transformations=standard_transformations,
        )
    except Exception as e:  # sympy raises a zoo of types on bad syntax
        raise ExpressionError(f"cannot parse {text!r}: {e}") from None

    expr = sp.sympify(expr)
    for node in sp.preorder_traversal(expr):
        if isinstance(node, sp.Function) and not isinstance(node, _ALLOWED_FUNCTIONS):
            raise ExpressionError(f"function {node.func} not allowed in {text!r}")
    if expr.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
        raise ExpressionError(f"expression {text!r} is not finite")
    if not expr.free_symbols <= {T, X, Y}:
        raise ExpressionError(f"unexpected symbols {expr.free_symbols} in {text!r}")
    return expr


def compile_expression(expr: sp.Expr) -> Callable:
    """Numpy callable f(t, x, y) for an expression."""
    return sp.lambdify((T, X, Y), expr, modules="numpy")


def depends_on_time(expr: sp.Expr) -> bool:
    return T in expr.free_symbols


def depends_on_space(expr: sp.Expr) -> bool:
    return bool(expr.free_symbols & {X, Y})
