"""Textual forms of EIN operators and SSA programs.

``pretty`` renders the conventional lambda notation (1-based constant
indices, Unicode by default, ASCII on request); ``sexpr`` is the stable
0-based dump used by golden tests and ``einc dump-ir``.
"""

from .ir import (
    Binary, ConstScalar, Conv, Delta, EinApp, EinOp, Epsilon2, Epsilon3, Field, KernelWeight,
    Lift, Partial, Probe, SsaProgram, Sum, Tensor, Unary, Voxel, is_var,
)

_BIN_SYM = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
_UNI = {"sum": "Σ", "delta": "δ", "eps": "ε", "partial": "∂", "le": "≤", "lam": "λ",
        "lt": "⟨", "gt": "⟩", "conv": "⊛", "sqrt": "√"}
_ASC = {"sum": "sum", "delta": "delta", "eps": "eps", "partial": "d", "le": "<=", "lam": "lambda",
        "lt": "<", "gt": ">", "conv": "(*)", "sqrt": "sqrt"}


def _ix(ix) -> str:
    return ix if is_var(ix) else str(ix + 1)


def _ixs(idx) -> str:
    return ",".join(_ix(i) for i in idx)


def pretty_expr(e, names=None, ascii=False) -> str:
    s = _ASC if ascii else _UNI
    names = names or {}

    def nm(p):
        return names.get(p, f"P{p}")

    def sub(idx):
        return f"_{{{_ixs(idx)}}}" if idx else ""

    def go(e, prec=0):
        if isinstance(e, Tensor):
            return nm(e.param) + sub(e.index)
        if isinstance(e, Field):
            return nm(e.param) + sub(e.index)
        if isinstance(e, Delta):
            return f"{s['delta']}_{{{_ixs(e.indices())}}}"
        if isinstance(e, (Epsilon2, Epsilon3)):
            return f"{s['eps']}_{{{_ixs(e.indices())}}}"
        if isinstance(e, ConstScalar):
            v = e.value
            return repr(int(v)) if float(v).is_integer() else repr(v)
        if isinstance(e, Unary):
            if e.op == "neg":
                out = "-" + go(e.arg, 3)
                return f"({out})" if prec > 2 else out
            if e.op == "pow":
                return f"{go(e.arg, 4)}^{e.n}"
            if e.op == "sqrt":
                return f"{s['sqrt']}({go(e.arg)})"
            return f"{e.op}({go(e.arg)})"
        if isinstance(e, Binary):
            p = 1 if e.op in ("add", "sub") else 2
            out = f"{go(e.lhs, p)} {_BIN_SYM[e.op]} {go(e.rhs, p + 1)}"
            return f"({out})" if prec > p else out
        if isinstance(e, Sum):
            out = f"{s['sum']}_{{{e.var}{s['le']}{e.bound}}} {go(e.body, 2)}"
            return f"({out})" if prec > 1 else out
        if isinstance(e, Probe):
            return f"({go(e.field)})@{go(e.pos, 4)}"
        if isinstance(e, Lift):
            return f"{s['lt']}{go(e.body)}{s['gt']}"
        if isinstance(e, Conv):
            h = nm(e.kernel) + (f"^{{{_ixs(e.beta)}}}" if e.beta else "")
            return f"{nm(e.image)}{sub(e.alpha)}{s['conv']}{h}"
        if isinstance(e, Partial):
            return f"{s['partial']}_{_ix(e.index)} {go(e.body, 4)}"
        if isinstance(e, Voxel):
            return f"{nm(e.image)}[{nm(e.base)}+{_ixs(e.taps)}]{sub(e.alpha)}"
        if isinstance(e, KernelWeight):
            return f"{nm(e.kernel)}{sub(e.deriv)}({nm(e.frac)}_{e.axis + 1}-{_ix(e.tap)})"
        raise TypeError(type(e).__name__)

    return go(e)


def pretty(op: EinOp, ascii=False, names=None) -> str:
    s = _ASC if ascii else _UNI
    names = names or {p: f"P{p}" for p in range(len(op.params))}
    ps = ",".join(names[p] for p in range(len(op.params)))
    ix = ",".join(f"{v}{s['le']}{n}" for v, n in op.index)
    return f"{s['lam']}({ps}){s['lt']}{pretty_expr(op.body, names, ascii)}{s['gt']}_{{{ix}}}"


def _sx_ix(idx) -> str:
    return "(" + " ".join(str(i) for i in idx) + ")"


def sexpr(e) -> str:
    if isinstance(e, EinOp):
        params = " ".join(_sx_type(p) for p in e.params)
        index = " ".join(f"({v} {n})" for v, n in e.index)
        return f"(ein (params {params}) (index {index}) {sexpr(e.body)})"
    if isinstance(e, Tensor):
        return f"(T {e.param} {_sx_ix(e.index)})"
    if isinstance(e, Field):
        return f"(F {e.param} {_sx_ix(e.index)})"
    if isinstance(e, Delta):
        return f"(delta {e.i} {e.j})"
    if isinstance(e, Epsilon2):
        return f"(eps {e.i} {e.j})"
    if isinstance(e, Epsilon3):
        return f"(eps {e.i} {e.j} {e.k})"
    if isinstance(e, ConstScalar):
        return f"(const {e.value!r})"
    if isinstance(e, Unary):
        if e.op == "pow":
            return f"(pow {e.n} {sexpr(e.arg)})"
        return f"({e.op} {sexpr(e.arg)})"
    if isinstance(e, Binary):
        return f"({e.op} {sexpr(e.lhs)} {sexpr(e.rhs)})"
    if isinstance(e, Sum):
        return f"(sum ({e.var} {e.bound}) {sexpr(e.body)})"
    if isinstance(e, Probe):
        return f"(probe {sexpr(e.field)} {sexpr(e.pos)})"
    if isinstance(e, Lift):
        return f"(lift {sexpr(e.body)})"
    if isinstance(e, Conv):
        return f"(conv {e.image} {_sx_ix(e.alpha)} {e.kernel} {_sx_ix(e.beta)})"
    if isinstance(e, Partial):
        return f"(partial {e.index} {sexpr(e.body)})"
    if isinstance(e, Voxel):
        return f"(voxel {e.image} {_sx_ix(e.alpha)} {_sx_ix(e.taps)} {e.base} {e.kernel})"
    if isinstance(e, KernelWeight):
        return f"(weight {e.kernel} {e.axis} {_sx_ix(e.deriv)} {e.tap} {e.frac})"
    raise TypeError(type(e).__name__)


def _sx_type(t) -> str:
    sh = " ".join(map(str, t.shape))
    if t.kind == "tensor":
        return f"(tensor ({sh}))"
    if t.kind == "field":
        return f"(field {t.k} {t.dim} ({sh}))"
    if t.kind == "image":
        return f"(image {t.dim} ({sh}))"
    return f"(kernel {t.kernel} {t.k} {t.support})"


def dump_program(prog: SsaProgram) -> str:
    lines = ["(program"]
    for name, t in prog.inputs:
        lines.append(f"  (input {name} {_sx_type(t)})")
    for a in prog.assigns:
        if isinstance(a.rhs, EinApp):
            args = " ".join(a.rhs.args)
            lines.append(f"  (assign {a.lhs} (app {sexpr(a.rhs.op)} ({args})))")
        else:
            p = a.rhs
            args = " ".join(p.args)
            attrs = " ".join(repr(x) for x in p.attrs)
            lines.append(f"  (assign {a.lhs} (prim {p.kind} ({args}) ({attrs})))")
    for name, v in prog.outputs:
        lines.append(f"  (output {name} {v})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def pretty_program(prog: SsaProgram, ascii=False) -> str:
    out = []
    for a in prog.assigns:
        if isinstance(a.rhs, EinApp):
            op = a.rhs.op
            names = {p: f"P{p}" for p in range(len(op.params))}
            out.append(f"{a.lhs} = {pretty(op, ascii, names)}({', '.join(a.rhs.args)})")
        else:
            p = a.rhs
            out.append(f"{a.lhs} = {p.kind}({', '.join(list(p.args) + [repr(x) for x in p.attrs])})")
    for name, v in prog.outputs:
        out.append(f"output {name} = {v}")
    return "\n".join(out) + "\n"

