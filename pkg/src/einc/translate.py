"""Simple AST to HighIR: each operation becomes an EIN operator application.

Generic operators are instantiated at the concrete argument types.  Lifted
operations use the same encodings with field references in place of
tensor references; a tensor argument of a field operation is wrapped in a
lift.
"""

from __future__ import annotations

from .errors import UnsupportedShape
from .frontend.typecheck import SimpleProgram
from .ir import (
    Assign, Binary, Conv, Delta, EinApp, EinOp, Epsilon2, Epsilon3, Field, Lift, Partial,
    Primitive, Probe, SsaProgram, Sum, Tensor, Unary, VarType, add, check_program, mul, sums,
)

_NAMES = "ijklmnpqrs"


def index_vars(n: int, avoid=()) -> list:
    out = []
    k = 0
    while len(out) < n:
        base = _NAMES[k % len(_NAMES)]
        name = base if k < len(_NAMES) else f"{base}{k // len(_NAMES)}"
        k += 1
        if name not in avoid:
            out.append(name)
    return out


class _Builder:
    """Helpers for writing one operator body."""

    def __init__(self, types, result_kind):
        self.types = list(types)
        self.field = result_kind == "field"
        self.used = []

    def vars(self, n):
        vs = index_vars(n, self.used)
        self.used.extend(vs)
        return vs

    def ref(self, p, idx):
        t = self.types[p]
        idx = tuple(idx)
        if t.kind == "field":
            return Field(p, idx)
        e = Tensor(p, idx)
        return Lift(e) if self.field else e


def _op(types, body, index):
    return EinOp(tuple(types), body, tuple(index))


def instantiate(name: str, types, result: VarType, attrs=()) -> EinOp:
    """Encode operation ``name`` at argument ``types`` as an EIN operator."""
    b = _Builder(types, result.kind)
    out = b.vars(len(result.shape))
    index = list(zip(out, result.shape))

    if name == "conv":
        return _op(types, Conv(0, tuple(out), 1, ()), index)
    if name == "probe":
        return _op(types, Probe(Field(0, tuple(out)), Tensor(1, ())), index)
    if name in ("add", "sub"):
        return _op(types, Binary(name, b.ref(0, out), b.ref(1, out)), index)
    if name == "neg":
        return _op(types, Unary("neg", b.ref(0, out)), index)
    if name == "retype":
        return _op(types, b.ref(0, out), index)
    if name == "scale":
        return _op(types, mul(b.ref(0, ()), b.ref(1, out)), index)
    if name == "divide":
        return _op(types, Binary("div", b.ref(0, out), b.ref(1, ())), index)
    if name == "unary":
        return _op(types, Unary(attrs[0], b.ref(0, ())), index)
    if name == "pow":
        return _op(types, Unary("pow", b.ref(0, ()), attrs[0]), index)
    if name == "dot":
        na = len(types[0].shape) - 1
        (k,) = b.vars(1)
        n = types[0].shape[-1]
        body = Sum(k, n, mul(b.ref(0, out[:na] + [k]), b.ref(1, [k] + out[na:])))
        return _op(types, body, index)
    if name == "outer":
        na = len(types[0].shape)
        return _op(types, mul(b.ref(0, out[:na]), b.ref(1, out[na:])), index)
    if name == "cross":
        if types[0].shape == (3,):
            j, k = b.vars(2)
            body = sums([(j, 3), (k, 3)], mul(mul(Epsilon3(out[0], j, k), b.ref(0, [j])), b.ref(1, [k])))
        elif types[0].shape == (2,):
            i, j = b.vars(2)
            body = sums([(i, 2), (j, 2)], mul(mul(Epsilon2(i, j), b.ref(0, [i])), b.ref(1, [j])))
        else:
            raise UnsupportedShape(f"cross product of {types[0]}")
        return _op(types, body, index)
    if name == "trace":
        (i,) = b.vars(1)
        return _op(types, Sum(i, types[0].shape[0], b.ref(0, [i, i])), index)
    if name == "transpose":
        i, j = out
        return _op(types, b.ref(0, [j, i]), index)
    if name == "norm":
        shape = types[0].shape
        vs = b.vars(len(shape))
        x = b.ref(0, vs)
        return _op(types, Unary("sqrt", sums(zip(vs, shape), mul(x, x))), index)
    if name == "identity":
        return _op(types, Delta(out[0], out[1]), index)
    if name == "cons":
        terms = [mul(Delta(out[0], c), b.ref(c, out[1:])) for c in range(len(types))]
        body = terms[0]
        for t in terms[1:]:
            body = add(body, t)
        return _op(types, body, index)
    if name == "select":
        return _op(types, b.ref(0, tuple(attrs) + tuple(out)), index)
    if name == "grad":
        return _op(types, Partial(out[0], Field(0, tuple(out[1:]))), index)
    if name == "curl":
        d = types[0].dim
        if d == 3:
            j, k = b.vars(2)
            body = sums([(j, 3), (k, 3)], mul(Epsilon3(out[0], j, k), Partial(j, Field(0, (k,)))))
        elif d == 2:
            i, j = b.vars(2)
            body = sums([(i, 2), (j, 2)], mul(Epsilon2(i, j), Partial(i, Field(0, (j,)))))
        else:
            raise UnsupportedShape(f"curl in dimension {d}")
        return _op(types, body, index)
    if name == "divergence":
        (i,) = b.vars(1)
        return _op(types, Sum(i, types[0].dim, Partial(i, Field(0, (i,)))), index)
    raise UnsupportedShape(f"no generic operator {name!r}")


_PRIMS = {"image", "kernel", "const", "position", "input"}


def translate_program(simple: SimpleProgram) -> SsaProgram:
    types = simple.types()
    assigns = []
    for bnd in simple.bindings:
        if bnd.op in _PRIMS:
            rhs = Primitive(bnd.op, (), bnd.attrs)
        else:
            op = instantiate(bnd.op, [types[a] for a in bnd.args], bnd.type, bnd.attrs)
            rhs = EinApp(op, bnd.args)
        assigns.append(Assign(bnd.var, rhs))
    prog = SsaProgram(
        assigns, dict(types), [(n, v) for n, v, _ in simple.outputs], list(simple.inputs),
        {n: d for n, _, d in simple.outputs}, simple.pos_dim)
    check_program(prog)
    return prog

