"""Reference interpreter for EIN operators and SSA programs.

Evaluation is pointwise and slow on purpose.  Field expressions are
evaluated as Taylor jets at the probe position, so derivatives come from
jet arithmetic and from direct convolution sums rather than from any of
the compiler's rewrite rules.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import BindingError, OutOfDomain
from .ir import (
    Binary, ConstScalar, Conv, Delta, EinApp, EinOp, Epsilon2, Epsilon3, Field, KernelWeight, Lift,
    Partial, Primitive, Probe, SsaProgram, Sum, Tensor, Unary, Voxel, is_var,
)
from .jet import Jet, apply_unary
from .runtime.image import Image
from .runtime.kernels import eval_kernel, get_kernel
from .runtime.oracle import oracle_probe


def levi_civita(idx) -> int:
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0
    sign = 1
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            if idx[a] > idx[b]:
                sign = -sign
    return sign


class FieldValue:
    """A field produced by a field-valued operator applied to concrete arguments."""

    def __init__(self, op: EinOp, vals: list, interp: "Interpreter"):
        self.op = op
        self.vals = vals
        self.interp = interp

    def component(self, alpha, p, m):
        env = {v: a for (v, _), a in zip(self.op.index, alpha)}
        return self.interp.eval(self.op.body, env, self.vals, (p, m))


class Interpreter:
    def __init__(self, border: str = "error"):
        self.border = border
        self._conv_cache = {}

    def _conv_derivative(self, img, ker, beta, p):
        key = (id(img), id(ker), tuple(sorted(beta)), tuple(p))
        out = self._conv_cache.get(key)
        if out is None:
            out = oracle_probe(img, ker, beta, p, self.border)
            self._conv_cache[key] = out
        return out

    def eval(self, e, env, vals, ctx=None):
        """Value of ``e`` under index valuation ``env``.  ``ctx`` is ``(p, m)``
        in a field context (result is a float or a Jet of order ``m``)."""

        def ix(i):
            return env[i] if is_var(i) else i

        if isinstance(e, ConstScalar):
            return float(e.value)
        if isinstance(e, Tensor):
            return float(vals[e.param][tuple(ix(i) for i in e.index)])
        if isinstance(e, Delta):
            return 1.0 if ix(e.i) == ix(e.j) else 0.0
        if isinstance(e, (Epsilon2, Epsilon3)):
            return float(levi_civita([ix(i) for i in e.indices()]))
        if isinstance(e, Unary):
            return apply_unary(e.op, self.eval(e.arg, env, vals, ctx), e.n)
        if isinstance(e, Binary):
            a = self.eval(e.lhs, env, vals, ctx)
            b = self.eval(e.rhs, env, vals, ctx)
            if e.op == "add":
                return a + b
            if e.op == "sub":
                return a - b
            if e.op == "mul":
                return a * b
            return a / b
        if isinstance(e, Sum):
            acc = 0.0
            for v in range(e.bound):
                acc = acc + self.eval(e.body, {**env, e.var: v}, vals, ctx)
            return acc
        if isinstance(e, Probe):
            p = np.asarray(vals[e.pos.param], dtype=float)
            out = self.eval(e.field, env, vals, (p, 0))
            return out.value if isinstance(out, Jet) else float(out)
        if isinstance(e, Lift):
            return self.eval(e.body, env, vals, None)
        if isinstance(e, Field):
            p, m = ctx
            return vals[e.param].component(tuple(ix(i) for i in e.index), p, m)
        if isinstance(e, Partial):
            p, m = ctx
            inner = self.eval(e.body, env, vals, (p, m + 1))
            if not isinstance(inner, Jet):
                return 0.0
            return inner.diff(ix(e.index))
        if isinstance(e, Conv):
            p, m = ctx
            img, ker = vals[e.image], vals[e.kernel]
            alpha = tuple(ix(i) for i in e.alpha)
            beta = [ix(i) for i in e.beta]

            def deriv(ex):
                extra = [k for k, c in enumerate(ex) for _ in range(c)]
                return self._conv_derivative(img, ker, beta + extra, p)[alpha]

            return Jet.from_derivatives(img.dim, m, deriv)
        if isinstance(e, Voxel):
            img, ker = vals[e.image], vals[e.kernel]
            base = vals[e.base]
            s = ker.support
            coords = []
            for k, t in enumerate(e.taps):
                c = int(base[k]) + ix(t) + 1 - s
                if not 0 <= c < img.sizes[k]:
                    if self.border != "clamp":
                        raise OutOfDomain(f"voxel index {c} outside axis {k} of size {img.sizes[k]}")
                    c = min(max(c, 0), img.sizes[k] - 1)
                coords.append(c)
            return float(img.data[tuple(coords) + tuple(ix(i) for i in e.alpha)])
        if isinstance(e, KernelWeight):
            ker = vals[e.kernel]
            r = sum(1 for i in e.deriv if ix(i) == e.axis)
            t = float(vals[e.frac][e.axis]) - (ix(e.tap) + 1 - ker.support)
            return eval_kernel(ker, r, t)
        raise TypeError(type(e).__name__)

    def op(self, op: EinOp, vals: list):
        if op.is_field:
            return FieldValue(op, vals, self)
        out = np.zeros(op.shape)
        for alpha in itertools.product(*(range(n) for n in op.shape)):
            env = {v: a for (v, _), a in zip(op.index, alpha)}
            out[alpha] = self.eval(op.body, env, vals)
        return out


def evaluate_op(op: EinOp, vals, border: str = "error"):
    """Apply ``op`` to concrete parameter values (arrays, images, kernels, fields)."""
    return Interpreter(border).op(op, list(vals))


def primitive_value(prim: Primitive, env: dict, bindings: dict, pos, types=None):
    k = prim.kind
    if k == "image":
        name = prim.attrs[0]
        if name not in bindings:
            raise BindingError(f"no image bound to input {name!r}")
        img = bindings[name]
        if not isinstance(img, Image):
            raise BindingError(f"input {name!r} must be an image")
        return img
    if k == "kernel":
        return get_kernel(prim.attrs[0])
    if k == "const":
        shape, values = prim.attrs
        return np.asarray(values, dtype=float).reshape(shape)
    if k == "position":
        return np.asarray(pos, dtype=float)
    if k == "input":
        name, shape = prim.attrs[0], prim.attrs[1]
        if name not in bindings:
            raise BindingError(f"no value bound to input {name!r}")
        val = np.asarray(bindings[name], dtype=float)
        if val.size != int(np.prod(shape, dtype=int)):
            raise BindingError(f"input {name!r} has {val.size} values, expected shape {list(shape)}")
        return val.reshape(shape)
    if k == "transform-matrix":
        return env[prim.args[0]].A
    if k == "transform-offset":
        return env[prim.args[0]].b
    raise ValueError(f"unknown primitive {k}")


def evaluate_program(prog: SsaProgram, bindings: dict, pos, border: str = "error") -> dict:
    """Outputs of ``prog`` at one world position."""
    interp = Interpreter(border)
    env = {}
    for a in prog.assigns:
        if isinstance(a.rhs, EinApp):
            env[a.lhs] = interp.op(a.rhs.op, [env[v] for v in a.rhs.args])
        else:
            env[a.lhs] = primitive_value(a.rhs, env, bindings, pos)
    return {name: np.asarray(env[v]) for name, v in prog.outputs}
