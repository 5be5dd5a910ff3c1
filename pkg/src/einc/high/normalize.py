"""Push probes below lifted operators and derivatives down to the kernels.

Rewriting is innermost-first: children are normalized before rules are
tried at a node, and every rule's output is normalized again.  Each rule
application spends one unit of fuel.
"""

from __future__ import annotations

from typing import Callable, Optional

from ..errors import FuelExhausted
from ..ir import (
    ONE, ZERO, Binary, ConstScalar, Conv, Delta, EinOp, Epsilon2, Epsilon3, Field, Lift, Partial, Probe,
    Sum, Unary, add, div, mul, neg, node_count, sub, walk,
)

Trace = Optional[Callable[[str, object, object], None]]

_CONSTANT = (ConstScalar, Delta, Epsilon2, Epsilon3)


def _chain(op: str, e, de, n: int):
    """d/dx op(e) given de = d/dx e."""
    if op == "neg":
        return neg(de)
    if op == "sqrt":
        return div(de, mul(ConstScalar(2.0), Unary("sqrt", e)))
    if op == "exp":
        return mul(Unary("exp", e), de)
    if op == "pow":
        if n == 0:
            return ZERO
        if n == 1:
            return de
        lower = e if n == 2 else Unary("pow", e, n - 1)
        return mul(mul(ConstScalar(float(n)), lower), de)
    if op == "sin":
        return mul(Unary("cos", e), de)
    if op == "cos":
        return neg(mul(Unary("sin", e), de))
    if op == "tan":
        return mul(add(ONE, Unary("pow", Unary("tan", e), 2)), de)
    if op == "asin":
        return div(de, Unary("sqrt", sub(ONE, mul(e, e))))
    if op == "acos":
        return neg(div(de, Unary("sqrt", sub(ONE, mul(e, e)))))
    if op == "atan":
        return div(de, add(ONE, mul(e, e)))
    if op == "floor":
        return ZERO
    raise ValueError(op)


def probe_rule(e: Probe):
    f, x = e.field, e.pos
    if isinstance(f, Unary):
        return "probe-unary", Unary(f.op, Probe(f.arg, x), f.n)
    if isinstance(f, Binary):
        return f"probe-{f.op}", Binary(f.op, Probe(f.lhs, x), Probe(f.rhs, x))
    if isinstance(f, Sum):
        return "probe-sum", Sum(f.var, f.bound, Probe(f.body, x))
    if isinstance(f, Lift):
        return "probe-lift", f.body
    if isinstance(f, _CONSTANT):
        return "probe-const", f
    return None


def derivative_rule(e: Partial):
    mu, b = e.index, e.body
    if isinstance(b, Binary):
        d1, d2 = Partial(mu, b.lhs), Partial(mu, b.rhs)
        if b.op in ("add", "sub"):
            return f"deriv-{b.op}", Binary(b.op, d1, d2)
        if b.op == "mul":
            return "deriv-product", add(mul(d1, b.rhs), mul(b.lhs, d2))
        return "deriv-quotient", div(sub(mul(d1, b.rhs), mul(b.lhs, d2)), Unary("pow", b.rhs, 2))
    if isinstance(b, Unary):
        return f"deriv-{b.op}", _chain(b.op, b.arg, Partial(mu, b.arg), b.n)
    if isinstance(b, Sum):
        return "deriv-sum", Sum(b.var, b.bound, Partial(mu, b.body))
    if isinstance(b, Lift):
        return "deriv-lift", ZERO
    if isinstance(b, _CONSTANT):
        return "deriv-const", ZERO
    if isinstance(b, Conv):
        return "deriv-conv", Conv(b.image, b.alpha, b.kernel, b.beta + (mu,))
    return None


class Rewriter:
    def __init__(self, fuel: int, trace: Trace = None):
        self.fuel = fuel
        self.trace = trace
        self.steps = 0
        self._done = {}

    def fire(self, name, before, after):
        self.steps += 1
        if self.steps > self.fuel:
            raise FuelExhausted(f"normalization did not finish within {self.fuel} rewrites")
        if self.trace is not None:
            self.trace(name, before, after)

    def norm(self, e):
        hit = self._done.get(id(e))
        if hit is not None and hit[0] is e:
            return hit[1]
        out = self._norm(e)
        self._done[id(e)] = (e, out)
        self._done[id(out)] = (out, out)
        return out

    def _norm(self, e):
        kids = e.children()
        if kids:
            new = tuple(self.norm(k) for k in kids)
            if any(a is not b for a, b in zip(new, kids)):
                e = e.rebuild(new)
        r = None
        if isinstance(e, Probe):
            r = probe_rule(e)
        elif isinstance(e, Partial):
            r = derivative_rule(e)
        if r is None:
            return e
        name, out = r
        self.fire(name, e, out)
        return self.norm(out)


def fuel_for(body) -> int:
    n = node_count(body)
    return 10 * n * n


def normalize(op: EinOp, trace: Trace = None) -> EinOp:
    rw = Rewriter(fuel_for(op.body), trace)
    return EinOp(op.params, rw.norm(op.body), op.index)


def is_normal(op: EinOp) -> bool:
    """No derivative, field or lift nodes; convolutions only directly under probes."""
    def ok(e, parent):
        if isinstance(e, (Partial, Field, Lift)):
            return False
        if isinstance(e, Conv) and not isinstance(parent, Probe):
            return False
        if isinstance(e, Probe) and not isinstance(e.field, Conv):
            return False
        return all(ok(k, e) for k in e.children())

    return ok(op.body, None)


def probes(op: EinOp) -> list:
    return [x for x in walk(op.body) if isinstance(x, Probe)]
