"""MidIR to scalar instructions by full unrolling of index maps and sums.

No sharing is attempted here beyond what SSA variables already provide;
``value_number_low`` does the rest.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import BudgetExceeded, UnsupportedShape
from ..evaluate import levi_civita
from ..ir import (
    Binary, ConstScalar, Delta, EinApp, Epsilon2, Epsilon3, KernelWeight, Sum, Tensor, Unary, Voxel, is_var,
)
from ..lowir import Instr, ScalarProgram


class _Handle:
    """Compile-time stand-in for an image or kernel variable."""

    def __init__(self, kind, name, dim=0, shape=(), support=0):
        self.kind, self.name, self.dim, self.shape, self.support = kind, name, dim, shape, support


class _Emitter:
    def __init__(self, budget):
        self.instrs = []
        self.budget = budget
        self.group = ""

    def __call__(self, op, args=(), attrs=()):
        self.instrs.append(Instr(op, tuple(args), tuple(attrs), self.group))
        if len(self.instrs) > self.budget:
            raise BudgetExceeded(f"scalar program exceeds {self.budget} instructions", len(self.instrs))
        return len(self.instrs) - 1


def _lower_expr(emit, e, env, vals):
    def go(e, env):
        if isinstance(e, Tensor):
            return vals[e.param][tuple(env[i] if is_var(i) else i for i in e.index)]
        if isinstance(e, ConstScalar):
            return emit("const", (), (float(e.value),))
        if isinstance(e, Delta):
            a = env[e.i] if is_var(e.i) else e.i
            b = env[e.j] if is_var(e.j) else e.j
            return emit("const", (), (1.0 if a == b else 0.0,))
        if isinstance(e, (Epsilon2, Epsilon3)):
            return emit("const", (), (float(levi_civita(tuple(env[i] if is_var(i) else i for i in e.indices()))),))
        if isinstance(e, Unary):
            a = go(e.arg, env)
            return emit(e.op, (a,), (e.n,) if e.op == "pow" else ())
        if isinstance(e, Binary):
            a = go(e.lhs, env)
            b = go(e.rhs, env)
            return emit(e.op, (a, b))
        if isinstance(e, Sum):
            acc = None
            for k in range(e.bound):
                x = go(e.body, {**env, e.var: k})
                acc = x if acc is None else emit("add", (acc, x))
            return acc
        if isinstance(e, Voxel):
            img, ker = vals[e.image], vals[e.kernel]
            base = vals[e.base]
            offs = tuple(int(env[t] if is_var(t) else t) + 1 - ker.support for t in e.taps)
            alpha = tuple(env[i] if is_var(i) else i for i in e.alpha)
            comp = int(np.ravel_multi_index(alpha, img.shape)) if img.shape else 0
            return emit("voxel", tuple(base[k] for k in range(img.dim)), (img.name, offs, comp))
        if isinstance(e, KernelWeight):
            ker = vals[e.kernel]
            r = sum(1 for i in e.deriv if (env[i] if is_var(i) else i) == e.axis)
            tap = env[e.tap] if is_var(e.tap) else e.tap
            return emit("kernel", (vals[e.frac][e.axis],), (ker.name, r, tap + 1 - ker.support))
        raise UnsupportedShape(f"{type(e).__name__} cannot be lowered to scalar code")

    return go(e, env)


def lower_mid_to_low(prog, node_budget: int = 100_000) -> ScalarProgram:
    emit = _Emitter(node_budget)
    vals = {}
    images = {}
    inputs = {}
    for a in prog.assigns:
        emit.group = a.lhs
        rhs = a.rhs
        if isinstance(rhs, EinApp):
            op = rhs.op
            args = [vals[v] for v in rhs.args]
            out = np.empty(op.shape, dtype=object)
            for alpha in itertools.product(*(range(n) for n in op.shape)):
                env = {v: k for (v, _), k in zip(op.index, alpha)}
                out[alpha] = _lower_expr(emit, op.body, env, args)
            vals[a.lhs] = out
            continue
        k = rhs.kind
        t = prog.types[a.lhs]
        if k == "image":
            images[rhs.attrs[0]] = (t.dim, tuple(t.shape))
            vals[a.lhs] = _Handle("image", rhs.attrs[0], t.dim, tuple(t.shape))
        elif k == "kernel":
            vals[a.lhs] = _Handle("kernel", t.kernel, support=t.support)
        elif k == "const":
            shape, values = rhs.attrs
            flat = [emit("const", (), (float(v),)) for v in values]
            vals[a.lhs] = np.array(flat, dtype=object).reshape(shape)
        elif k == "position":
            vals[a.lhs] = np.array([emit("pos", (), (i,)) for i in range(t.shape[0])], dtype=object)
        elif k == "input":
            name, shape = rhs.attrs[0], tuple(rhs.attrs[1])
            inputs[name] = shape
            n = int(np.prod(shape, dtype=int))
            vals[a.lhs] = np.array([emit("input", (), (name, i)) for i in range(n)], dtype=object).reshape(shape)
        elif k in ("transform-matrix", "transform-offset"):
            img = vals[rhs.args[0]]
            d = img.dim
            if k == "transform-matrix":
                ids = [[emit("xform", (), (img.name, r, c)) for c in range(d)] for r in range(d)]
            else:
                ids = [emit("xform", (), (img.name, r, d)) for r in range(d)]
            vals[a.lhs] = np.array(ids, dtype=object)
        else:
            raise UnsupportedShape(f"primitive {k} cannot be lowered to scalar code")
    outputs = []
    for name, v in prog.outputs:
        arr = vals[v]
        outputs.append((name, tuple(arr.shape), tuple(int(x) for x in arr.reshape(-1))))
    return ScalarProgram(emit.instrs, outputs, images, inputs, prog.pos_dim, dict(prog.domains))
