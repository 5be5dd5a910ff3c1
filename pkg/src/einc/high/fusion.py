"""Inline operator applications into their consumers.

A definition is inlined when it is field valued, or when the consumer is
itself a field/probe computation (so the rewrite rules can see through it).
Pure tensor chains are left alone unless ``fuse_tensors`` is set.  The
position argument of a probe is never inlined.
"""

from __future__ import annotations

from ..ir import (
    Assign, ConstScalar, Conv, EinApp, EinOp, Field, Primitive, Probe, SsaProgram, Tensor, all_vars, contains,
    params_used, rename_apart, rename_params, substitute, transform, walk,
)


def _position_params(body) -> set:
    return {x.pos.param for x in walk(body) if isinstance(x, Probe)}


def _has_fields(body) -> bool:
    return contains(body, lambda x: isinstance(x, (Field, Probe, Conv)))


def _drop_param(op: EinOp, args: tuple, p: int, body) -> tuple:
    params = op.params[:p] + op.params[p + 1:]
    body = rename_params(body, lambda q: q - 1 if q > p else q)
    return EinOp(params, body, op.index), args[:p] + args[p + 1:]


def tidy(op: EinOp, args: tuple) -> tuple:
    """Merge parameters bound to the same variable and drop unused ones."""
    args = tuple(args)
    p = 0
    while p < len(args):
        first = args.index(args[p])
        if first != p:
            body = rename_params(op.body, {p: first})
            op, args = _drop_param(op, args, p, body)
            continue
        p += 1
    used = params_used(op.body)
    for p in reversed(range(len(args))):
        if p not in used:
            op, args = _drop_param(op, args, p, op.body)
    return op, args


def inline(op: EinOp, args: tuple, p: int, inner: EinOp, inner_args: tuple) -> tuple:
    """Substitute ``inner`` for parameter ``p`` of ``op``."""
    avoid = all_vars(op.body) | {v for v, _ in op.index}
    inner = rename_apart(inner, avoid)
    base = len(op.params)
    inner_body = rename_params(inner.body, lambda q: q + base)
    body = substitute(op.body, p, inner_body, [v for v, _ in inner.index])
    wide = EinOp(op.params + inner.params, body, op.index)
    wide_args = tuple(args) + tuple(inner_args)
    return _drop_param(wide, wide_args, p, body)


def _const_scalar(prim: Primitive):
    if prim.kind == "const" and prim.attrs[0] == ():
        return ConstScalar(float(prim.attrs[1][0]))
    return None


def fuse(prog: SsaProgram, fuse_tensors: bool = False) -> SsaProgram:
    defs = {}
    out = []
    for a in prog.assigns:
        rhs = a.rhs
        if isinstance(rhs, EinApp):
            op, args = rhs.op, tuple(rhs.args)
            changed = True
            while changed:
                changed = False
                skip = _position_params(op.body)
                consumer_is_field = _has_fields(op.body)
                for p, v in enumerate(args):
                    d = defs.get(v)
                    if isinstance(d, Primitive):
                        c = _const_scalar(d)
                        if c is not None and p not in skip:
                            body = transform(op.body, lambda x, p=p, c=c: c if isinstance(x, Tensor) and x.param == p else x)
                            op, args = _drop_param(op, args, p, body)
                            changed = True
                            break
                        continue
                    if not isinstance(d, EinApp) or p in skip:
                        continue
                    if op.params[p].kind == "field" or consumer_is_field or fuse_tensors:
                        op, args = inline(op, args, p, d.op, d.args)
                        op, args = tidy(op, args)
                        changed = True
                        break
            op, args = tidy(op, args)
            rhs = EinApp(op, args)
        defs[a.lhs] = rhs
        out.append(Assign(a.lhs, rhs))
    return prog.replace(out).dce()
