"""Truncated multivariate Taylor jets.

A jet of order ``m`` in ``d`` variables holds the Taylor coefficients
``c[e] = (d^e f)(p) / e!`` for every exponent ``e`` with ``|e| <= m``.
The reference evaluator uses jets to differentiate field expressions
without any symbolic rewriting.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def exponents(d: int, m: int) -> tuple:
    return tuple(e for e in itertools.product(range(m + 1), repeat=d) if sum(e) <= m)


class Jet:
    __slots__ = ("d", "m", "c")

    def __init__(self, d: int, m: int, c: np.ndarray | None = None):
        self.d = d
        self.m = m
        self.c = np.zeros((m + 1,) * d) if c is None else c

    @classmethod
    def const(cls, d, m, v) -> "Jet":
        j = cls(d, m)
        j.c[(0,) * d] = v
        return j

    @classmethod
    def from_derivatives(cls, d, m, deriv) -> "Jet":
        """``deriv(e)`` returns the partial derivative for exponent ``e``."""
        j = cls(d, m)
        for e in exponents(d, m):
            j.c[e] = deriv(e) / math.prod(math.factorial(k) for k in e)
        return j

    @property
    def value(self) -> float:
        return float(self.c[(0,) * self.d])

    def derivative(self, e) -> float:
        return float(self.c[tuple(e)]) * math.prod(math.factorial(k) for k in e)

    def copy(self) -> "Jet":
        return Jet(self.d, self.m, self.c.copy())

    def truncate(self, m: int) -> "Jet":
        out = Jet(self.d, m)
        for e in exponents(self.d, min(m, self.m)):
            out.c[e] = self.c[e]
        return out

    def diff(self, axis: int) -> "Jet":
        """Partial derivative along ``axis``; the order drops by one."""
        out = Jet(self.d, max(self.m - 1, 0))
        for e in exponents(self.d, self.m - 1) if self.m else ():
            up = list(e)
            up[axis] += 1
            out.c[e] = (e[axis] + 1) * self.c[tuple(up)]
        return out

    def __neg__(self):
        return Jet(self.d, self.m, -self.c)

    def __add__(self, o):
        if isinstance(o, Jet):
            return Jet(self.d, self.m, self.c + o.c)
        out = self.copy()
        out.c[(0,) * self.d] += o
        return out

    __radd__ = __add__

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, Jet):
            return Jet(self.d, self.m, self.c * o)
        out = Jet(self.d, self.m)
        ex = exponents(self.d, self.m)
        for ea in ex:
            ca = self.c[ea]
            if ca == 0.0:
                continue
            room = self.m - sum(ea)
            for eb in ex:
                if sum(eb) <= room:
                    out.c[tuple(x + y for x, y in zip(ea, eb))] += ca * o.c[eb]
        return out

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet):
            return self * compose("recip", o)
        return Jet(self.d, self.m, self.c / o)

    def __rtruediv__(self, o):
        return compose("recip", self) * o

    def euler(self) -> "Jet":
        out = self.copy()
        for e in exponents(self.d, self.m):
            out.c[e] *= sum(e)
        return out

    def inv_euler(self) -> "Jet":
        out = Jet(self.d, self.m)
        for e in exponents(self.d, self.m):
            if sum(e):
                out.c[e] = self.c[e] / sum(e)
        return out


def _pad(j: Jet, m: int) -> Jet:
    out = Jet(j.d, m)
    for e in exponents(j.d, j.m):
        out.c[e] = j.c[e]
    return out


def _scalar(op: str, x: float, n: int = 0) -> float:
    if op == "recip":
        return 1.0 / x
    if op == "pow":
        return x ** n
    if op == "floor":
        return float(math.floor(x))
    return getattr(math, op)(x)


def ipow(g: Jet, n: int) -> Jet:
    if n < 0:
        return compose("recip", ipow(g, -n))
    out = Jet.const(g.d, g.m, 1.0)
    for _ in range(n):
        out = out * g
    return out


def _outer_derivative(op: str, g: Jet, n: int) -> Jet:
    """f'(g) for the elementary function ``op``."""
    if op == "sqrt":
        return compose("recip", compose("sqrt", g)) * 0.5
    if op == "exp":
        return compose("exp", g)
    if op == "sin":
        return compose("cos", g)
    if op == "cos":
        return -compose("sin", g)
    if op == "tan":
        t = compose("tan", g)
        return t * t + 1.0
    if op in ("asin", "acos"):
        r = compose("recip", compose("sqrt", 1.0 - g * g))
        return r if op == "asin" else -r
    if op == "atan":
        return compose("recip", g * g + 1.0)
    if op == "recip":
        r = compose("recip", g)
        return -(r * r)
    if op == "pow":
        return ipow(g, n - 1) * n
    if op == "floor":
        return Jet(g.d, g.m)
    raise ValueError(op)


def compose(op: str, g: Jet, n: int = 0) -> Jet:
    """Jet of ``op(g)`` using ``E f(g) = f'(g) E g`` with ``E`` the Euler operator."""
    if op == "neg":
        return -g
    if op == "pow" and n >= 0:
        return ipow(g, n)
    base = Jet.const(g.d, g.m, _scalar(op, g.value, n))
    if g.m == 0:
        return base
    fp = _pad(_outer_derivative(op, g.truncate(g.m - 1), n), g.m)
    return base + (fp * g.euler()).inv_euler()


def apply_unary(op: str, x, n: int = 0):
    if isinstance(x, Jet):
        return compose(op, x, n)
    if op == "neg":
        return -x
    return _scalar(op, x, n)
