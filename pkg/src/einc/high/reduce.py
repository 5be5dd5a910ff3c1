"""Index-based simplification: delta and epsilon reductions, constant folding.

Sums of products that contain a delta or an epsilon are flattened into
monomials ``c * sum_{binders} prod(factors)`` so the index rules can see
every factor that shares a summation index.  Everything else keeps its
shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import FuelExhausted
from ..ir import (
    ONE, ZERO, Binary, ConstScalar, Conv, Delta, EinOp, Epsilon2, Epsilon3, Probe, Sum, Unary, all_vars,
    free_vars, fresh_name, is_var, mul, node_count, rename_free, sums, transform,
)
from ..printer import sexpr
from .normalize import Trace

_EPS = (Epsilon2, Epsilon3)


# ---------------------------------------------------------------------------
# constant folding

def _num(e):
    return e.value if isinstance(e, ConstScalar) else None


def _unary_const(op, v, n):
    try:
        if op == "neg":
            return -v
        if op == "pow":
            return v ** n
        if op == "floor":
            return float(math.floor(v))
        return getattr(math, op)(v)
    except (ValueError, OverflowError, ZeroDivisionError):
        return None


def _perm_sign(idx) -> int:
    if len(set(idx)) != len(idx):
        return 0
    sign = 1
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            if idx[a] > idx[b]:
                sign = -sign
    return sign


def fold_node(e):
    """One constant-folding step at the root of ``e`` (children already folded)."""
    if isinstance(e, Binary):
        a, b = _num(e.lhs), _num(e.rhs)
        if a is not None and b is not None:
            if e.op == "add":
                return ConstScalar(a + b)
            if e.op == "sub":
                return ConstScalar(a - b)
            if e.op == "mul":
                return ConstScalar(a * b)
            if b != 0.0:
                return ConstScalar(a / b)
            return e
        if e.op == "mul":
            if a == 0.0 or b == 0.0:
                return ZERO
            if a == 1.0:
                return e.rhs
            if b == 1.0:
                return e.lhs
            if a == -1.0:
                return Unary("neg", e.rhs)
            if b == -1.0:
                return Unary("neg", e.lhs)
            if isinstance(e.rhs, Binary) and e.rhs.op == "div" and _num(e.rhs.lhs) == 1.0:
                return Binary("div", e.lhs, e.rhs.rhs)
            if isinstance(e.lhs, Binary) and e.lhs.op == "div" and _num(e.lhs.lhs) == 1.0:
                return Binary("div", e.rhs, e.lhs.rhs)
        elif e.op == "add":
            if a == 0.0:
                return e.rhs
            if b == 0.0:
                return e.lhs
        elif e.op == "sub":
            if b == 0.0:
                return e.lhs
            if a == 0.0:
                return Unary("neg", e.rhs)
        elif e.op == "div":
            if a == 0.0:
                return ZERO
            if b == 1.0:
                return e.lhs
        return e
    if isinstance(e, Unary):
        v = _num(e.arg)
        if v is not None:
            r = _unary_const(e.op, v, e.n)
            return e if r is None else ConstScalar(float(r))
        if e.op == "neg" and isinstance(e.arg, Unary) and e.arg.op == "neg":
            return e.arg.arg
        if e.op == "pow" and e.n == 0:
            return ONE
        if e.op == "pow" and e.n == 1:
            return e.arg
        return e
    if isinstance(e, Sum):
        v = _num(e.body)
        if v is not None:
            return ConstScalar(v * e.bound)
        if e.var not in free_vars(e.body):
            return Binary("mul", ConstScalar(float(e.bound)), e.body)
        return e
    if isinstance(e, Delta):
        if e.i == e.j:
            return ONE
        if not is_var(e.i) and not is_var(e.j):
            return ZERO
        return e
    if isinstance(e, _EPS):
        idx = e.indices()
        if len(set(idx)) != len(idx):
            return ZERO
        if not any(is_var(i) for i in idx):
            return ConstScalar(float(_perm_sign(idx)))
        return e
    if isinstance(e, Probe) and isinstance(e.field, ConstScalar):
        return e.field
    return e


def fold(body):
    return transform(body, fold_node)


# ---------------------------------------------------------------------------
# monomials

@dataclass
class Mono:
    coef: float
    binders: list = field(default_factory=list)  # [(var, bound)]
    factors: list = field(default_factory=list)

    def vars(self) -> set:
        out = {v for v, _ in self.binders}
        for f in self.factors:
            out |= all_vars(f)
        return out

    def rename(self, mapping) -> "Mono":
        binders = [(mapping.get(v, v), n) for v, n in self.binders]
        return Mono(self.coef, binders, [rename_free(f, mapping) for f in self.factors])


def _is_poly(e) -> bool:
    if isinstance(e, (Sum, ConstScalar)):
        return True
    if isinstance(e, Unary):
        return e.op == "neg"
    if isinstance(e, Binary):
        return True
    return False


def _poly_atoms(e):
    if isinstance(e, Binary) and e.op == "div":
        yield from _poly_atoms(e.lhs)
        return
    if _is_poly(e):
        for k in e.children():
            yield from _poly_atoms(k)
    else:
        yield e


class Reducer:
    def __init__(self, trace: Trace = None, fuel: int = 10**9):
        self.trace = trace
        self.fuel = fuel
        self.steps = 0

    def fire(self, name, before, after):
        self.steps += 1
        if self.steps > self.fuel:
            raise FuelExhausted(f"index reduction did not finish within {self.fuel} rewrites")
        if self.trace is not None:
            self.trace(name, before, after)

    # -- expansion ------------------------------------------------------
    def expand(self, e, reserved) -> list:
        if isinstance(e, ConstScalar):
            return [Mono(e.value)] if e.value != 0.0 else []
        if isinstance(e, Unary) and e.op == "neg":
            return [Mono(-m.coef, m.binders, m.factors) for m in self.expand(e.arg, reserved)]
        if isinstance(e, Binary) and e.op in ("add", "sub"):
            rhs = self.expand(e.rhs, reserved)
            if e.op == "sub":
                rhs = [Mono(-m.coef, m.binders, m.factors) for m in rhs]
            return self.expand(e.lhs, reserved) + rhs
        if isinstance(e, Binary) and e.op == "mul":
            if e.lhs == e.rhs and isinstance(e.lhs, Binary) and e.lhs.op in ("add", "sub"):
                # squares of differences stay squared: expanding them cancels catastrophically
                r = self.reduce(e.lhs)
                return [Mono(1.0, [], [mul(r, r)])]
            out = []
            left = self.expand(e.lhs, reserved)
            right = self.expand(e.rhs, reserved)
            for a in left:
                for b in right:
                    out.append(self._product(a, b, reserved))
            return out
        if isinstance(e, Binary) and e.op == "div":
            den = self.reduce(e.rhs)
            inv = Binary("div", ONE, den)
            return [self._product(m, Mono(1.0, [], [inv]), reserved) for m in self.expand(e.lhs, reserved)]
        if isinstance(e, Sum):
            return [Mono(m.coef, [(e.var, e.bound)] + m.binders, m.factors)
                    for m in self.expand(e.body, reserved)]
        return [Mono(1.0, [], [self.reduce(e)])]

    def _product(self, a: Mono, b: Mono, reserved) -> Mono:
        # binders of either side must not capture the other side's variables
        taken = a.vars() | reserved
        mapping = {}
        for v, _ in b.binders:
            if v in taken:
                nv = fresh_name(v, taken | b.vars() | set(mapping.values()))
                mapping[v] = nv
        if mapping:
            b = b.rename(mapping)
        for v, _ in a.binders:
            if v in {w for w, _ in b.binders} or any(v in free_vars(f) for f in b.factors):
                raise AssertionError("binder capture while expanding")
        return Mono(a.coef * b.coef, a.binders + b.binders, a.factors + b.factors)

    # -- rules on one monomial -----------------------------------------
    def step(self, m: Mono):
        """Apply one index rule; returns a list of monomials or None."""
        bound = {v for v, _ in m.binders}
        for k, f in enumerate(m.factors):
            if isinstance(f, Delta):
                rest = m.factors[:k] + m.factors[k + 1:]
                if f.i == f.j:
                    return "delta-same", [Mono(m.coef, m.binders, rest)]
                if not is_var(f.i) and not is_var(f.j):
                    return "delta-const", []
                for a, b in ((f.i, f.j), (f.j, f.i)):
                    if is_var(a) and a in bound:
                        binders = [(v, n) for v, n in m.binders if v != a]
                        return "delta-apply", [Mono(m.coef, binders, [rename_free(x, {a: b}) for x in rest])]
            if isinstance(f, _EPS):
                idx = f.indices()
                if len(set(idx)) != len(idx):
                    return "epsilon-repeat", []
                if not any(is_var(i) for i in idx):
                    rest = m.factors[:k] + m.factors[k + 1:]
                    return "epsilon-const", [Mono(m.coef * _perm_sign(idx), m.binders, rest)]
        r = self._eps_eps(m, bound)
        if r is not None:
            return r
        return self._antisymmetry(m, bound)

    def _eps_eps(self, m: Mono, bound):
        eps = [(k, f) for k, f in enumerate(m.factors) if isinstance(f, _EPS)]
        for x in range(len(eps)):
            for y in range(x + 1, len(eps)):
                (ka, a), (kb, b) = eps[x], eps[y]
                if type(a) is not type(b):
                    continue
                shared = [v for v in a.indices() if is_var(v) and v in bound and v in b.indices()]
                if not shared:
                    continue
                v = shared[0]
                rest = [f for k, f in enumerate(m.factors) if k not in (ka, kb)]
                binders = [(w, n) for w, n in m.binders if w != v]
                ia, sa = _rotate_front(a.indices(), v)
                ib, sb = _rotate_front(b.indices(), v)
                c = m.coef * sa * sb
                if isinstance(a, Epsilon3):
                    _, j, k = ia
                    _, l, mm = ib
                    return "epsilon-epsilon", [
                        Mono(c, binders, rest + [Delta(j, l), Delta(k, mm)]),
                        Mono(-c, binders, rest + [Delta(j, mm), Delta(k, l)]),
                    ]
                return "epsilon-epsilon", [Mono(c, binders, rest + [Delta(ia[1], ib[1])])]
        return None

    def _antisymmetry(self, m: Mono, bound):
        for k, f in enumerate(m.factors):
            if not isinstance(f, _EPS):
                continue
            rest = m.factors[:k] + m.factors[k + 1:]
            idx = [i for i in f.indices() if is_var(i) and i in bound]
            for x in range(len(idx)):
                for y in range(x + 1, len(idx)):
                    a, b = idx[x], idx[y]
                    swapped = [rename_free(g, {a: b, b: a}) for g in rest]
                    if _factor_key(swapped) == _factor_key(rest):
                        return "epsilon-symmetric", []
        return None

    def reduce_monos(self, monos: list) -> list:
        work = list(monos)
        done = []
        while work:
            m = work.pop(0)
            r = self.step(m)
            if r is None:
                done.append(m)
                continue
            name, out = r
            self.fire(name, rebuild([m]), rebuild(out))
            work = out + work
        return done

    # -- driver -----------------------------------------------------------
    def reduce(self, e):
        """Reduce ``e``; polynomial regions holding deltas or epsilons are expanded."""
        if _is_poly(e) and any(isinstance(a, (Delta,) + _EPS) for a in _poly_atoms(e)):
            monos = self.expand(e, free_vars(e))
            return rebuild(self.reduce_monos(monos))
        kids = e.children()
        if kids:
            new = tuple(self.reduce(k) for k in kids)
            if any(a is not b for a, b in zip(new, kids)):
                e = e.rebuild(new)
        return e


def _rotate_front(idx, v):
    """Cyclically rotate an epsilon's indices so ``v`` is first; returns the sign."""
    idx = tuple(idx)
    n = len(idx)
    p = idx.index(v)
    rot = idx[p:] + idx[:p]
    # a cyclic shift of length-3 indices is even; for two indices it is odd
    sign = 1 if n == 3 or p == 0 else -1
    return rot, sign


def canonical(e):
    """Key used for symmetry tests: derivative index lists compared as multisets."""
    def sort_beta(x):
        if isinstance(x, Conv):
            return Conv(x.image, x.alpha, x.kernel, tuple(sorted(x.beta, key=str)))
        return x
    return sexpr(transform(e, sort_beta))


def _factor_key(factors) -> list:
    return sorted(canonical(f) for f in factors)


def rebuild(monos: list):
    out = None
    for m in monos:
        body = _prod(m.factors)
        c = abs(m.coef)
        if c != 1.0:
            body = ConstScalar(c) if not m.factors else mul(ConstScalar(c), body)
        term = sums(m.binders, body)
        if out is None:
            out = term if m.coef >= 0 else Unary("neg", term)
        else:
            out = Binary("add" if m.coef >= 0 else "sub", out, term)
    return ZERO if out is None else out


def _prod(factors):
    if not factors:
        return ONE
    out = factors[0]
    for f in factors[1:]:
        out = mul(out, f)
    return out


def reduce_indices(op: EinOp, trace: Trace = None) -> EinOp:
    n = node_count(op.body)
    red = Reducer(trace, fuel=10 * n * n + 100)
    body = fold(op.body)
    for _ in range(100):
        new = fold(red.reduce(body))
        if new == body:
            break
        body = new
    else:
        raise FuelExhausted("index reduction did not reach a fixpoint")
    return EinOp(op.params, body, op.index)
