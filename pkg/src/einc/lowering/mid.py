"""HighIR to MidIR: replace probes of convolutions by explicit sums of
kernel weights times voxel samples.

Position transforms are separate assignments so they can be shared by every
probe of the same image.  With probe isolation each probe becomes its own
operator, optionally generalized over constant indices (slicing), and is
then expanded into a reconstruction operator plus a Jacobian operator when
it carries spatial derivatives.
"""

from __future__ import annotations

from collections import Counter

from ..errors import ContinuityExceeded, NotNormalized
from ..runtime.kernels import get_kernel
from ..high.fusion import tidy
from ..ir import (
    Assign, Conv, EinApp, EinOp, Field, KernelWeight, Lift, Partial, Primitive, Probe, Sum, Tensor, Unary, Voxel,
    add, all_vars, contains, is_var, mul, prod, shape_of, sub, sums, tensor_t, walk,
)
from ..translate import index_vars


def _check_normal(name, op: EinOp):
    for x in walk(op.body):
        if isinstance(x, (Field, Lift, Partial)) or (isinstance(x, Probe) and not isinstance(x.field, Conv)):
            raise NotNormalized(f"{name}: {type(x).__name__} remains after normalization")
        if isinstance(x, Conv) and not any(isinstance(p, Probe) and p.field is x for p in walk(op.body)):
            raise NotNormalized(f"{name}: convolution outside a probe")


def _probe_sites(body, index):
    """(path, probe, context) for each probe, pre-order."""
    out = []

    def go(x, path, ctx):
        if isinstance(x, Probe):
            out.append((path, x, ctx))
            return
        if isinstance(x, Sum):
            go(x.body, path + (0,), ctx + [(x.var, x.bound)])
            return
        for k, c in enumerate(x.children()):
            go(c, path + (k,), ctx)

    go(body, (), list(index))
    return out


def _replace_at(e, path, new):
    if not path:
        return new
    kids = list(e.children())
    kids[path[0]] = _replace_at(kids[path[0]], path[1:], new)
    return e.rebuild(tuple(kids))


class _Lowering:
    def __init__(self, prog, split: bool, slice_: bool):
        self.prog = prog
        self.split = split
        self.slice = slice_
        self.types = dict(prog.types)
        self.out = []
        self.frames = {}  # (image var, position var) -> (A, n, f)
        self.counter = Counter()

    def fresh(self, base):
        while True:
            self.counter[base] += 1
            name = f"{base}{self.counter[base]}"
            if name not in self.types:
                return name

    def emit(self, lhs, rhs, t):
        self.types[lhs] = t
        self.out.append(Assign(lhs, rhs))

    # -- position transforms ------------------------------------------------

    def frame(self, img: str, pos: str):
        """Variables holding the image's world-to-index matrix, and the integer
        and fractional parts of the index-space position."""
        key = (img, pos)
        if key in self.frames:
            return self.frames[key]
        d = self.types[img].dim
        sfx = img if pos == "pos" else f"{img}_{pos}"
        A, b = f"A_{sfx}", f"b_{sfx}"
        if A not in self.types:
            self.emit(A, Primitive("transform-matrix", (img,)), tensor_t((d, d)))
            self.emit(b, Primitive("transform-offset", (img,)), tensor_t((d,)))
        xi, n, f = f"x_{sfx}", f"n_{sfx}", f"f_{sfx}"
        i, j = "i", "j"
        self.emit(xi, EinApp(EinOp(
            (tensor_t((d, d)), tensor_t((d,)), tensor_t((d,))),
            add(Sum(j, d, mul(Tensor(0, (i, j)), Tensor(2, (j,)))), Tensor(1, (i,))),
            ((i, d),)), (A, b, pos)), tensor_t((d,)))
        self.emit(n, EinApp(EinOp((tensor_t((d,)),), Unary("floor", Tensor(0, (i,))), ((i, d),)), (xi,)),
                  tensor_t((d,)))
        self.emit(f, EinApp(EinOp((tensor_t((d,)), tensor_t((d,))),
                                  sub(Tensor(0, (i,)), Tensor(1, (i,))), ((i, d),)), (xi, n)),
                  tensor_t((d,)))
        self.frames[key] = (A, n, f)
        return self.frames[key]

    # -- expansion ------------------------------------------------------------

    def _check_order(self, ker_var, beta):
        kt = self.types[ker_var]
        max_order = get_kernel(kt.kernel).max_order
        if len(beta) > max_order:
            raise ContinuityExceeded(
                f"derivative of order {len(beta)} exceeds what kernel {kt.kernel} supports ({max_order})")

    @staticmethod
    def reconstruction(d, s, alpha, jvars, taps, V, H, N, F):
        """Σ_taps Π_k h^(r_k)(f_k - tap_k - 1 + s) · V[n + tap + 1 - s]_alpha"""
        w = [KernelWeight(H, k, tuple(jvars), taps[k], F) for k in range(d)]
        return sums([(t, 2 * s) for t in taps], mul(prod(w), Voxel(V, tuple(alpha), tuple(taps), N, H)))

    def expand_inline(self, op: EinOp, args: tuple):
        """Expand every probe of ``op`` in place (no isolation)."""
        params = list(op.params)
        args = list(args)
        body = op.body
        avoid = all_vars(body) | {v for v, _ in op.index}

        def param_for(var):
            if var in args:
                return args.index(var)
            params.append(self.types[var])
            args.append(var)
            return len(args) - 1

        for path, pr, _ctx in reversed(_probe_sites(body, op.index)):
            conv = pr.field
            img, ker, pos = args[conv.image], args[conv.kernel], args[pr.pos.param]
            self._check_order(ker, conv.beta)
            d, s = self.types[img].dim, self.types[ker].support
            A, n, f = self.frame(img, pos)
            pa, pn, pf = param_for(A), param_for(n), param_for(f)
            names = index_vars(len(conv.beta) + d, avoid)
            avoid |= set(names)
            jvars, taps = names[:len(conv.beta)], names[len(conv.beta):]
            e = self.reconstruction(d, s, conv.alpha, jvars, taps, conv.image, conv.kernel, pn, pf)
            if jvars:
                jac = [Tensor(pa, (jv, b)) for jv, b in zip(jvars, conv.beta)]
                e = sums([(jv, d) for jv in jvars], mul(prod(jac), e))
            body = _replace_at(body, path, e)
        return tidy(EinOp(tuple(params), body, op.index), tuple(args))

    def expand_isolated(self, lhs, op: EinOp, args: tuple):
        """Replace an operator whose body is a single probe by its
        reconstruction (and Jacobian) operators."""
        pr = op.body
        conv = pr.field
        img, ker, pos = args[conv.image], args[conv.kernel], args[pr.pos.param]
        self._check_order(ker, conv.beta)
        it, kt = self.types[img], self.types[ker]
        d, s, m = it.dim, kt.support, len(conv.beta)
        A, n, f = self.frame(img, pos)
        used = {v for v, _ in op.index}
        names = index_vars(m + d, used)
        jvars, taps = names[:m], names[m:]
        avars = [(v, b) for v, b in op.index if v in conv.alpha]
        r_index = tuple(avars) + tuple((j, d) for j in jvars)
        r_op = EinOp((it, kt, tensor_t((d,)), tensor_t((d,))),
                     self.reconstruction(d, s, conv.alpha, jvars, taps, 0, 1, 2, 3), r_index)
        r_args = (img, ker, n, f)
        if m == 0:
            self.emit(lhs, EinApp(r_op, r_args), self.types[lhs])
            return
        r_var = self.fresh(f"{lhs}_r")
        self.emit(r_var, EinApp(r_op, r_args), tensor_t(tuple(b for _, b in r_index)))
        jac = [Tensor(0, (jv, b)) for jv, b in zip(jvars, conv.beta)]
        ref = Tensor(1, tuple(v for v, _ in avars) + tuple(jvars))
        body = sums([(jv, d) for jv in jvars], mul(prod(jac), ref))
        self.emit(lhs, EinApp(EinOp((tensor_t((d, d)), tensor_t(tuple(b for _, b in r_index))), body, op.index),
                              (A, r_var)), self.types[lhs])

    # -- isolation --------------------------------------------------------

    def isolate(self, lhs, op: EinOp, args: tuple) -> list:
        """Move each probe of ``op`` into its own operator.  Returns the new
        assignments (probe operators first, host last)."""
        sites = _probe_sites(op.body, op.index)
        if not sites:
            return [(lhs, op, args)]
        if sites[0][0] == ():
            sub, sub_args = self._probe_op(op, args, op.body, op.index)
            return self.slice_probe(lhs, sub, sub_args) if self.slice else [(lhs, sub, sub_args)]
        out = []
        seen = {}
        params = list(op.params)
        args = list(args)
        body = op.body
        for path, pr, ctx in reversed(sites):
            shape = shape_of(pr, ctx)
            key = (pr, tuple(shape))
            if key not in seen:
                sub, sub_args = self._probe_op(op, args, pr, shape)
                var = self.fresh(f"{lhs}_p")
                self.types[var] = tensor_t(sub.shape)
                out.append(self.slice_probe(var, sub, sub_args) if self.slice else [(var, sub, sub_args)])
                params.append(tensor_t(sub.shape))
                args.append(var)
                seen[key] = len(args) - 1
            body = _replace_at(body, path, Tensor(seen[key], tuple(v for v, _ in shape)))
        host, host_args = tidy(EinOp(tuple(params), body, op.index), tuple(args))
        return [x for group in reversed(out) for x in group] + [(lhs, host, host_args)]

    @staticmethod
    def _probe_op(op, args, pr, index):
        """Standalone operator λ(V,H,x)⟨probe⟩ for a probe of ``op``."""
        conv = pr.field
        sub = EinOp((op.params[conv.image], op.params[conv.kernel], op.params[pr.pos.param]),
                    Probe(Conv(0, conv.alpha, 1, conv.beta), Tensor(2, ())), tuple(index))
        return sub, (args[conv.image], args[conv.kernel], args[pr.pos.param])

    def slice_probe(self, var, sub: EinOp, sub_args):
        """Generalize constant (or repeated) indices of an isolated probe and
        recover the requested components with a slicing operator."""
        conv = sub.body.field
        idx = conv.alpha + conv.beta
        if all(is_var(i) for i in idx) and len(set(idx)) == len(idx):
            return [(var, sub, sub_args)]
        it = sub.params[0]
        names = index_vars(len(idx), set())
        na = len(conv.alpha)
        bounds = list(it.shape) + [it.dim] * len(conv.beta)
        gen = EinOp(sub.params, Probe(Conv(0, tuple(names[:na]), 1, tuple(names[na:])), Tensor(2, ())),
                    tuple(zip(names, bounds)))
        gvar = self.fresh(f"{var}_g")
        self.types[gvar] = tensor_t(gen.shape)
        sl = EinOp((tensor_t(gen.shape),), Tensor(0, idx), sub.index)
        return [(gvar, gen, sub_args), (var, sl, (gvar,))]

    # -- driver -------------------------------------------------------------

    def isolate_all(self, vn):
        from ..sizemgmt import value_number
        pending = []
        for a in self.prog.assigns:
            if not isinstance(a.rhs, EinApp):
                pending.append(a)
                continue
            _check_normal(a.lhs, a.rhs.op)
            if self.split and contains(a.rhs.op.body, lambda x: isinstance(x, Probe)):
                for v, op, args in self.isolate(a.lhs, a.rhs.op, tuple(a.rhs.args)):
                    pending.append(Assign(v, EinApp(op, args)))
            else:
                pending.append(a)
        prog = self.prog.replace(pending, self.types)
        return value_number(prog) if vn else prog

    def expand_all(self, prog):
        for a in prog.assigns:
            rhs = a.rhs
            if not isinstance(rhs, EinApp) or not contains(rhs.op.body, lambda x: isinstance(x, Probe)):
                self.out.append(a)
            elif isinstance(rhs.op.body, Probe):
                self.expand_isolated(a.lhs, rhs.op, tuple(rhs.args))
            else:
                op, args = self.expand_inline(rhs.op, tuple(rhs.args))
                self.out.append(Assign(a.lhs, EinApp(op, args)))
        types = {a.lhs: self.types[a.lhs] for a in self.out}
        return prog.replace(self.out, types)


def isolate_probes(prog, slice_: bool = True, vn: bool = True):
    """Give every probe its own operator (the first half of lowering).

    With ``slice_`` constant component or derivative indices are
    generalized so that probes of different components of one field become
    the same operator, which ``vn`` then merges.
    """
    return _Lowering(prog, True, slice_).isolate_all(vn)


def lower_high_to_mid(prog, split: bool = True, slice_: bool = True, vn: bool = True):
    """Lower a normalized HighIR program to MidIR.

    ``split`` isolates probes before expansion; without it every probe is
    expanded in place inside its host operator.
    """
    low = _Lowering(prog, split, slice_)
    return low.expand_all(low.isolate_all(vn))
