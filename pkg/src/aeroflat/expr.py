"""Trajectory expressions: a small arithmetic grammar over ``t``.

Accepted: numbers, ``t``, the constants ``pi`` and ``e``, the unit factors
``kt``, ``ft``, ``deg`` and ``kmh`` (SI value of one unit), ``+ - * /``,
``**`` with a constant exponent, and the functions sin, cos, tan, arctan
(alias atan), exp, log, sqrt. Expressions are compiled to callables that
accept floats or TaylorSeries, so their series come from exact composition.
"""
import ast
import math

from . import series as ts
from .errors import ConfigError

UNITS = {"kt": 1852.0 / 3600.0, "ft": 0.3048, "deg": math.pi / 180.0, "kmh": 1.0 / 3.6}
CONSTANTS = {"pi": math.pi, "e": math.e, **UNITS}
FUNCTIONS = {
    "sin": ts.sin, "cos": ts.cos, "tan": ts.tan, "arctan": ts.arctan, "atan": ts.arctan,
    "exp": ts.exp, "log": ts.log, "sqrt": ts.sqrt,
}
_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b, ast.Mult: lambda a, b: a * b,
           ast.Div: lambda a, b: a / b}


class Expression:
    """A parsed expression; ``expr(t)`` evaluates on floats or series."""

    def __init__(self, text, source="<expr>", variable="t"):
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            text = repr(float(text))
        if not isinstance(text, str):
            raise ConfigError(f"{source}: expression must be a string or number, got {type(text).__name__}")
        self.text = text.strip()
        self.source = source
        self.variable = variable
        try:
            tree = ast.parse(self.text, mode="eval")
        except SyntaxError as e:
            raise ConfigError(f"{source}: col {e.offset}: cannot parse expression {self.text!r}") from None
        self._fn = self._compile(tree.body)
        self.constant = not self._uses_variable(tree.body)

    def _err(self, node, msg):
        col = getattr(node, "col_offset", 0) + 1
        return ConfigError(f"{self.source}: col {col}: {msg} in {self.text!r}")

    def _uses_variable(self, node):
        return any(isinstance(n, ast.Name) and n.id == self.variable for n in ast.walk(node))

    def _compile(self, node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise self._err(node, f"unsupported literal {node.value!r}")
            c = float(node.value)
            return lambda t: c
        if isinstance(node, ast.Name):
            if node.id == self.variable:
                return lambda t: t
            if node.id in CONSTANTS:
                c = CONSTANTS[node.id]
                return lambda t: c
            raise self._err(node, f"unknown name {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            f = self._compile(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda t: -f(t)
            return f
        if isinstance(node, ast.BinOp):
            a = self._compile(node.left)
            b = self._compile(node.right)
            if isinstance(node.op, ast.Pow):
                if self._uses_variable(node.right):
                    raise self._err(node, "exponent must not depend on t")
                k = b(0.0)
                if float(k).is_integer() and k >= 0:
                    n = int(k)
                    return lambda t: a(t) ** n
                return lambda t: ts.power(a(t), k)
            op = _BINOPS.get(type(node.op))
            if op is None:
                raise self._err(node, f"unsupported operator {type(node.op).__name__}")
            return lambda t: op(a(t), b(t))
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                name = getattr(node.func, "id", "?")
                raise self._err(node, f"unknown function {name!r}")
            if len(node.args) != 1 or node.keywords:
                raise self._err(node, f"{node.func.id} takes exactly one argument")
            fn = FUNCTIONS[node.func.id]
            arg = self._compile(node.args[0])
            return lambda t: fn(arg(t))
        raise self._err(node, f"unsupported syntax {type(node).__name__}")

    def __call__(self, t):
        return self._fn(t)

    def series(self, t0, order):
        """Exact Taylor expansion at ``t0`` to ``order``."""
        out = self._fn(ts.TaylorSeries.variable(t0, order))
        if not isinstance(out, ts.TaylorSeries):
            out = ts.TaylorSeries.constant(out, order)
        return out

    def __eq__(self, other):
        return isinstance(other, Expression) and self.text == other.text

    def __hash__(self):
        return hash(self.text)

    def __repr__(self):
        return f"Expression({self.text!r})"

    def __str__(self):
        return self.text


def expression_series(expr, t0, kappa):
    if not isinstance(expr, Expression):
        expr = Expression(expr)
    return expr.series(t0, kappa)
