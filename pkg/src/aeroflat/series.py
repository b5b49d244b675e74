"""Truncated power series in one variable and Newton operators over them.

A :class:`TaylorSeries` holds coefficients ``c[0..order]`` of a local
expansion ``c0 + c1*t + ... + c_order*t**order`` around some base time. Plain
floats behave as exact constants (infinite order), so model code written with
the module-level functions (:func:`sin`, :func:`sqrt`, ...) runs unchanged on
floats and on series. Evaluating a function on order-1 series with unit slope
gives exact first derivatives, which is how Jacobians are formed elsewhere
(:func:`jacobian`).
"""
import math
import numbers
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels as _k
from .errors import (
    NewtonConvergenceError,
    NewtonWarning,
    OrderError,
    SeriesDomainError,
    SingularDivisionError,
    SingularityError,
)

MAX_ORDER = 64


class TaylorSeries:
    """Immutable truncated power series."""

    __slots__ = ("coeffs",)
    __array_ufunc__ = None  # make numpy scalars defer to our reflected operators

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float).ravel()
        if c.size == 0:
            raise OrderError("a series needs at least one coefficient")
        if c.size - 1 > MAX_ORDER:
            raise OrderError(f"series order {c.size - 1} exceeds the limit {MAX_ORDER}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("TaylorSeries is immutable")

    @classmethod
    def _wrap(cls, c):
        # trusted fast path: c is a fresh float array within limits
        s = object.__new__(cls)
        c.flags.writeable = False
        object.__setattr__(s, "coeffs", c)
        return s

    @classmethod
    def constant(cls, value, order):
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, t0, order):
        """The identity function ``t0 + t`` expanded at ``t0``."""
        c = np.zeros(order + 1)
        c[0] = t0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @property
    def order(self):
        return self.coeffs.size - 1

    @property
    def value(self):
        return float(self.coeffs[0])

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self):
        return f"TaylorSeries({np.array2string(self.coeffs, precision=6, separator=', ')})"

    def truncate(self, order):
        if order > self.order:
            raise OrderError(f"cannot raise order {self.order} to {order} by truncation")
        return TaylorSeries._wrap(self.coeffs[: order + 1].copy())

    def extend(self, order):
        """Zero-pad (or truncate) to ``order``."""
        if order <= self.order:
            return self.truncate(order)
        c = np.zeros(order + 1)
        c[: self.coeffs.size] = self.coeffs
        return TaylorSeries._wrap(c)

    def __call__(self, dt):
        return _k.horner(self.coeffs, float(dt))

    def deriv(self):
        n = self.order
        if n < 1:
            raise OrderError("derivative of an order-0 series is not defined")
        return TaylorSeries._wrap(self.coeffs[1:] * np.arange(1, n + 1))

    def integrate(self, c0=0.0):
        n = self.order
        c = np.empty(n + 2)
        c[0] = c0
        c[1:] = self.coeffs / np.arange(1, n + 2)
        return TaylorSeries(c)

    def allclose(self, other, rtol=1e-12, atol=1e-12):
        o = other.coeffs if isinstance(other, TaylorSeries) else np.array(other, dtype=float)
        n = min(self.coeffs.size, o.size)
        return bool(np.allclose(self.coeffs[:n], o[:n], rtol=rtol, atol=atol))

    # arithmetic -----------------------------------------------------------

    def __neg__(self):
        return TaylorSeries._wrap(-self.coeffs)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, TaylorSeries):
            n = min(self.order, other.order)
            return TaylorSeries._wrap(self.coeffs[: n + 1] + other.coeffs[: n + 1])
        if isinstance(other, numbers.Real):
            c = self.coeffs.copy()
            c[0] += other
            return TaylorSeries._wrap(c)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, TaylorSeries):
            n = min(self.order, other.order)
            return TaylorSeries._wrap(self.coeffs[: n + 1] - other.coeffs[: n + 1])
        if isinstance(other, numbers.Real):
            c = self.coeffs.copy()
            c[0] -= other
            return TaylorSeries._wrap(c)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, numbers.Real):
            c = -self.coeffs
            c[0] += other
            return TaylorSeries._wrap(c)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, TaylorSeries):
            n = min(self.order, other.order)
            return TaylorSeries._wrap(_k.mul(self.coeffs, other.coeffs, n))
        if isinstance(other, numbers.Real):
            return TaylorSeries._wrap(self.coeffs * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TaylorSeries):
            if other.coeffs[0] == 0.0:
                raise SingularDivisionError("series division by a series with zero constant term")
            n = min(self.order, other.order)
            return TaylorSeries._wrap(_k.div(self.coeffs, other.coeffs, n))
        if isinstance(other, numbers.Real):
            if other == 0:
                raise SingularDivisionError("series division by zero")
            return TaylorSeries._wrap(self.coeffs / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, numbers.Real):
            if self.coeffs[0] == 0.0:
                raise SingularDivisionError("series division by a series with zero constant term")
            num = np.zeros(self.coeffs.size)
            num[0] = other
            return TaylorSeries._wrap(_k.div(num, self.coeffs, self.order))
        return NotImplemented

    def __pow__(self, p):
        if isinstance(p, numbers.Integral):
            p = int(p)
            if p == 0:
                return TaylorSeries.constant(1.0, self.order)
            if p < 0:
                return 1.0 / (self ** (-p))
            out, base = None, self
            while p:
                if p & 1:
                    out = base if out is None else out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        if isinstance(p, numbers.Real):
            return power(self, p)
        return NotImplemented


def is_series(x):
    return isinstance(x, TaylorSeries)


def const_term(x):
    return x.value if isinstance(x, TaylorSeries) else float(x)


def order_of(*xs):
    """Minimum order among series arguments; ``None`` if all are scalars."""
    orders = [x.order for x in xs if isinstance(x, TaylorSeries)]
    return min(orders) if orders else None


# elementary functions ------------------------------------------------------

def sin(a):
    if isinstance(a, TaylorSeries):
        s, _ = _k.sincos(a.coeffs, a.order)
        return TaylorSeries._wrap(s)
    return math.sin(a)


def cos(a):
    if isinstance(a, TaylorSeries):
        _, c = _k.sincos(a.coeffs, a.order)
        return TaylorSeries._wrap(c)
    return math.cos(a)


def sincos(a):
    if isinstance(a, TaylorSeries):
        s, c = _k.sincos(a.coeffs, a.order)
        return TaylorSeries._wrap(s), TaylorSeries._wrap(c)
    return math.sin(a), math.cos(a)


def tan(a):
    if isinstance(a, TaylorSeries):
        s, c = _k.sincos(a.coeffs, a.order)
        if abs(c[0]) < 1e-300:
            raise SeriesDomainError("tan: cos of the constant term is zero")
        return TaylorSeries._wrap(_k.div(s, c, a.order))
    return math.tan(a)


def exp(a):
    if isinstance(a, TaylorSeries):
        return TaylorSeries._wrap(_k.exp(a.coeffs, a.order))
    return math.exp(a)


def log(a):
    if isinstance(a, TaylorSeries):
        if a.coeffs[0] <= 0:
            raise SeriesDomainError("log: constant term must be positive")
        return TaylorSeries._wrap(_k.log(a.coeffs, a.order))
    return math.log(a)


def sqrt(a):
    if isinstance(a, TaylorSeries):
        if a.coeffs[0] <= 0:
            raise SeriesDomainError("sqrt: constant term must be positive")
        return TaylorSeries._wrap(_k.sqrt(a.coeffs, a.order))
    if a < 0:
        raise SeriesDomainError("sqrt: negative argument")
    return math.sqrt(a)


def power(a, p):
    if isinstance(a, TaylorSeries):
        if float(p).is_integer():
            return a ** int(p)
        if a.coeffs[0] <= 0:
            raise SeriesDomainError("pow: constant term must be positive for a non-integer exponent")
        return TaylorSeries._wrap(_k.power(a.coeffs, float(p), a.order))
    return a ** p


def arctan(a):
    if isinstance(a, TaylorSeries):
        if a.order == 0:
            return TaylorSeries([math.atan(a.coeffs[0])])
        d = a.deriv() / (1.0 + a * a)
        return d.integrate(math.atan(a.coeffs[0]))
    return math.atan(a)


def arcsin(a):
    if isinstance(a, TaylorSeries):
        if abs(a.coeffs[0]) >= 1.0:
            raise SeriesDomainError("arcsin: |constant term| must be < 1")
        if a.order == 0:
            return TaylorSeries([math.asin(a.coeffs[0])])
        d = a.deriv() / sqrt(1.0 - a * a)
        return d.integrate(math.asin(a.coeffs[0]))
    return math.asin(a)


def atan2(y, x, reference=None):
    """Angle of the vector (x, y); with ``reference`` the constant term is
    shifted by a multiple of 2*pi to lie closest to it."""
    y0, x0 = const_term(y), const_term(x)
    c0 = math.atan2(y0, x0)
    if reference is not None:
        c0 += 2.0 * math.pi * round((reference - c0) / (2.0 * math.pi))
    if not (isinstance(y, TaylorSeries) or isinstance(x, TaylorSeries)):
        return c0
    n = order_of(y, x)
    if n == 0:
        return TaylorSeries([c0])
    ys = y if isinstance(y, TaylorSeries) else TaylorSeries.constant(y, n)
    xs = x if isinstance(x, TaylorSeries) else TaylorSeries.constant(x, n)
    ys, xs = ys.truncate(n), xs.truncate(n)
    r2 = xs * xs + ys * ys
    if r2.coeffs[0] == 0.0:
        raise SeriesDomainError("atan2: zero vector at the base point")
    d = (xs.truncate(n - 1) * ys.deriv() - ys.truncate(n - 1) * xs.deriv()) / r2.truncate(n - 1)
    return d.integrate(c0)


ELEMENTARY = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "arctan": arctan,
    "arcsin": arcsin,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "pow": power,
}


def series_elementary(a, fn, *args):
    try:
        f = ELEMENTARY[fn]
    except KeyError:
        raise ValueError(f"unknown elementary function {fn!r}") from None
    return f(a, *args)


def series_arith(a, b, op):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def series_deriv(a):
    return a.deriv()


# containers ----------------------------------------------------------------

@dataclass
class SeriesVector:
    """Named series sharing one base time; per-entry orders may differ."""

    entries: dict = field(default_factory=dict)
    base_time: float = 0.0

    def __getitem__(self, name):
        return self.entries[name]

    def __setitem__(self, name, value):
        self.entries[name] = value

    def __contains__(self, name):
        return name in self.entries

    def __iter__(self):
        return iter(self.entries)

    def keys(self):
        return self.entries.keys()

    def items(self):
        return self.entries.items()

    def get(self, name, default=None):
        return self.entries.get(name, default)

    def constants(self):
        return {k: const_term(v) for k, v in self.entries.items()}

    def orders(self):
        return {k: (v.order if isinstance(v, TaylorSeries) else None) for k, v in self.entries.items()}

    def at(self, t):
        """Values of all entries at absolute time ``t`` (local polynomial evaluation)."""
        dt = t - self.base_time
        return {k: (v(dt) if isinstance(v, TaylorSeries) else float(v)) for k, v in self.entries.items()}


# Jacobians -----------------------------------------------------------------

def jacobian(f, x):
    """Exact Jacobian of a scalar-vector function by forward evaluation on
    order-1 series. ``f`` must be written with the series-aware functions."""
    x = np.asarray(x, dtype=float)
    cols = []
    f0 = None
    for j in range(x.size):
        args = [float(v) for v in x]
        args[j] = TaylorSeries([x[j], 1.0])
        out = f(args)
        cols.append([o.coeffs[1] if isinstance(o, TaylorSeries) and o.order >= 1 else 0.0 for o in out])
        if f0 is None:
            f0 = np.array([const_term(o) for o in out])
    if f0 is None:
        f0 = np.asarray([const_term(o) for o in f(list(x))])
    return np.array(cols).T.reshape(len(f0), x.size)


def _fd_steps(x):
    return np.maximum(1e-7, 1e-7 * np.abs(x))


def _fd_jacobian_point(residual, x, r0):
    h = _fd_steps(x)
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        xp = x.copy()
        xp[j] += h[j]
        J[:, j] = (np.asarray(residual(xp), dtype=float) - r0) / h[j]
    return J


@dataclass
class NewtonInfo:
    converged: bool
    iterations: int
    residual_norm: float
    history: list


def newton_point(residual, x0, tol=1e-3, max_iter=20, jac=None, on_fail="warn", full_output=False):
    """Newton's method for a square system of real equations.

    ``jac`` is an optional callable returning the Jacobian; without it forward
    differences with step ``max(1e-7, 1e-7*|x_i|)`` are used. Convergence is
    declared when the max-norm of the residual is <= ``tol``. On failure a
    :class:`NewtonWarning` is issued (``on_fail="warn"``) or a
    :class:`NewtonConvergenceError` raised (``on_fail="raise"``); either way
    the last iterate is carried along.
    """
    x = np.array(x0, dtype=float, ndmin=1)
    r = np.asarray(residual(x), dtype=float).ravel()
    norm = float(np.max(np.abs(r))) if r.size else 0.0
    history = [norm]
    it = 0
    while norm > tol and it < max_iter:
        J = np.asarray(jac(x), dtype=float) if jac is not None else _fd_jacobian_point(residual, x, r)
        try:
            step = np.linalg.solve(J.reshape(r.size, x.size), r)
        except np.linalg.LinAlgError:
            raise SingularityError(f"singular Jacobian in Newton iteration at x={x}") from None
        x = x - step
        r = np.asarray(residual(x), dtype=float).ravel()
        norm = float(np.max(np.abs(r)))
        history.append(norm)
        it += 1
        if not np.isfinite(norm):
            break
    converged = bool(norm <= tol)
    if not converged:
        msg = f"Newton failed to reach {tol:g} after {it} iterations (residual {norm:.3e})"
        if on_fail == "raise":
            raise NewtonConvergenceError(msg, x=x, residual_norm=norm)
        warnings.warn(NewtonWarning(msg, x=x, residual_norm=norm), stacklevel=2)
    if full_output:
        return x, NewtonInfo(converged, it, norm, history)
    return x


# linear algebra over series -------------------------------------------------

def series_matrix_coeffs(M, order):
    """Stack a matrix of series/scalars into an array (order+1, rows, cols)."""
    rows, cols = len(M), len(M[0])
    out = np.zeros((order + 1, rows, cols))
    for i in range(rows):
        for j in range(cols):
            m = M[i][j]
            if isinstance(m, TaylorSeries):
                n = min(order, m.order)
                out[: n + 1, i, j] = m.coeffs[: n + 1]
            else:
                out[0, i, j] = m
    return out


def solve_linear(M, rhs, order, what="matrix"):
    """Solve M(t) u(t) = rhs(t) for series u, coefficient by coefficient.

    Only the constant matrix is inverted; ``what`` names the matrix in the
    error raised when it is singular.
    """
    A = series_matrix_coeffs(M, order)
    n = A.shape[1]
    b = np.zeros((order + 1, n))
    for i, r in enumerate(rhs):
        if isinstance(r, TaylorSeries):
            m = min(order, r.order)
            b[: m + 1, i] = r.coeffs[: m + 1]
        else:
            b[0, i] = r
    A0 = A[0]
    if not np.all(np.isfinite(A0)):
        raise SingularityError(f"non-finite {what}")
    cond = np.linalg.cond(A0)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularityError(f"singular {what} at the base point (det={np.linalg.det(A0):.3e})")
    lu = np.linalg.inv(A0)
    u = np.zeros((order + 1, n))
    for k in range(order + 1):
        acc = b[k].copy()
        for j in range(1, k + 1):
            acc -= A[j] @ u[k - j]
        u[k] = lu @ acc
    return [TaylorSeries(u[:, i]) for i in range(n)]


def _as_list(x):
    if isinstance(x, SeriesVector):
        return list(x.entries.values()), list(x.entries.keys()), x.base_time
    if isinstance(x, dict):
        return list(x.values()), list(x.keys()), 0.0
    return list(x), None, None


def newton_series(residual, x0, target_order, jac=None, polish=3, full_output=False):
    """Newton's method over truncated series with order doubling.

    ``x0`` supplies constant terms that already solve the order-0 system.
    Each step doubles the number of valid coefficients (1, 2, 4, ...) until
    ``target_order`` is covered. ``jac(x)`` may return the series Jacobian as
    a nested list; otherwise it is formed by forward differences, in which case
    up to ``polish`` extra full-order steps remove the differencing error.

    ``residual`` receives a list of series (or a SeriesVector when ``x0`` is
    one) and returns a sequence of series. With ``full_output`` the history
    holds, per step, the residual coefficients through ``target_order``.
    """
    vals, names, base = _as_list(x0)
    n = len(vals)
    consts = np.array([const_term(v) for v in vals])

    def wrap(xs):
        if names is None:
            return xs
        return SeriesVector(dict(zip(names, xs)), base_time=base if base is not None else 0.0)

    def call(xs):
        out = residual(wrap(xs))
        out, _, _ = _as_list(out)
        return out

    def resid_coeffs(F, order):
        out = np.zeros((len(F), order + 1))
        for i, f in enumerate(F):
            if isinstance(f, TaylorSeries):
                m = min(order, f.order)
                out[i, : m + 1] = f.coeffs[: m + 1]
            else:
                out[i, 0] = f
        return out

    def fd_jac(xs, F, order):
        h = _fd_steps(consts)
        J = [[None] * n for _ in range(len(F))]
        for j in range(n):
            xp = list(xs)
            xp[j] = xs[j] + h[j]
            Fp = call(xp)
            for i in range(len(F)):
                J[i][j] = (Fp[i] - F[i]) * (1.0 / h[j])
        return J

    def step(xs, order):
        F = [f.truncate(order) if isinstance(f, TaylorSeries) and f.order > order else f for f in call(xs)]
        J = jac(wrap(xs)) if jac is not None else fd_jac(xs, F, order)
        delta = solve_linear(J, F, order, what="series Jacobian")
        return [x - d for x, d in zip(xs, delta)]

    def full_residual(xs):
        return resid_coeffs(call([x.extend(target_order) for x in xs]), target_order)

    history = []
    xs = [TaylorSeries.constant(c, 0) for c in consts]
    valid = 1
    history.append(full_residual(xs) if full_output else None)
    while valid <= target_order:
        valid = min(2 * valid, target_order + 1)
        xs = [x.extend(valid - 1) for x in xs]
        xs = step(xs, valid - 1)
        history.append(full_residual(xs) if full_output else None)
    if jac is None and target_order > 0:
        best = np.max(np.abs(full_residual(xs)))
        for _ in range(polish):
            if best == 0.0:
                break
            trial = step(xs, target_order)
            r = np.max(np.abs(resid_coeffs(call(trial), target_order)))
            if not r < best:
                break
            xs, best = trial, r
            if full_output:
                history.append(full_residual(xs))
    out = wrap(xs)
    if full_output:
        return out, history
    return out


def lag_inverse_series(x, eps, terms):
    """sum_{i=0}^{terms} (-eps)^i x^{(i+1)}: the solution y of x' = y + eps*y'
    expanded in powers of eps and truncated after ``terms``.

    ``x`` must have order at least ``terms + 1``; the result has order
    ``x.order - terms - 1``.
    """
    if x.order < terms + 1:
        raise OrderError(f"need order >= {terms + 1} for {terms} terms, got {x.order}")
    d = x.deriv()
    keep = x.order - terms - 1
    out = np.zeros(keep + 1)
    w = 1.0
    for i in range(terms + 1):
        out += w * d.coeffs[: keep + 1]
        if i < terms:
            d = d.deriv()
            w *= -eps
    return TaylorSeries(out)
