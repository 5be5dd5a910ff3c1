"""EIN expressions, operators and the SSA program that embeds them.

Indices are plain Python values: an index variable is a ``str`` and a
constant index is an ``int`` (0-based).  Parameters inside an operator body
are referred to by their position in ``EinOp.params``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence, Union

from .errors import (
    ArityMismatch,
    EpsilonDimMismatch,
    ShapeMismatch,
    UnboundIndex,
    UnboundParam,
    WellFormedError,
)

Index = Union[str, int]

UNARY_OPS = ("neg", "sqrt", "exp", "pow", "sin", "cos", "tan", "asin", "acos", "atan", "floor")
BINARY_OPS = ("add", "sub", "mul", "div")


def is_var(ix) -> bool:
    return isinstance(ix, str)


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class VarType:
    """Type of an SSA variable or of an operator parameter."""

    kind: str  # tensor | field | image | kernel
    shape: tuple = ()
    dim: int = 0
    k: int = 0
    kernel: str = ""
    support: int = 0

    def __str__(self):
        sh = ",".join(map(str, self.shape))
        if self.kind == "tensor":
            return f"tensor[{sh}]"
        if self.kind == "field":
            return f"field#{self.k}({self.dim})[{sh}]"
        if self.kind == "image":
            return f"image({self.dim})[{sh}]"
        return f"kernel({self.kernel})"


def tensor_t(shape=()) -> VarType:
    return VarType("tensor", tuple(shape))


def field_t(k, dim, shape=()) -> VarType:
    return VarType("field", tuple(shape), dim=dim, k=k)


def image_t(dim, shape=()) -> VarType:
    return VarType("image", tuple(shape), dim=dim)


def kernel_t(name, k, support) -> VarType:
    return VarType("kernel", (), k=k, kernel=name, support=support)


# ---------------------------------------------------------------------------
# expressions

class Expr:
    """Base of the EIN expression tree.  Nodes are immutable."""

    __slots__ = ()

    def children(self) -> tuple:
        return ()

    def rebuild(self, kids) -> "Expr":
        return self

    def indices(self) -> tuple:
        return ()

    def with_indices(self, idx) -> "Expr":
        return self

    def params(self) -> tuple:
        return ()

    def with_params(self, f) -> "Expr":
        return self


@dataclass(frozen=True)
class Tensor(Expr):
    param: int
    index: tuple = ()

    def indices(self):
        return self.index

    def with_indices(self, idx):
        return Tensor(self.param, tuple(idx))

    def params(self):
        return (self.param,)

    def with_params(self, f):
        return Tensor(f(self.param), self.index)


@dataclass(frozen=True)
class Field(Expr):
    param: int
    index: tuple = ()

    def indices(self):
        return self.index

    def with_indices(self, idx):
        return Field(self.param, tuple(idx))

    def params(self):
        return (self.param,)

    def with_params(self, f):
        return Field(f(self.param), self.index)


@dataclass(frozen=True)
class Delta(Expr):
    i: Index
    j: Index

    def indices(self):
        return (self.i, self.j)

    def with_indices(self, idx):
        return Delta(*idx)


@dataclass(frozen=True)
class Epsilon2(Expr):
    i: Index
    j: Index

    def indices(self):
        return (self.i, self.j)

    def with_indices(self, idx):
        return Epsilon2(*idx)


@dataclass(frozen=True)
class Epsilon3(Expr):
    i: Index
    j: Index
    k: Index

    def indices(self):
        return (self.i, self.j, self.k)

    def with_indices(self, idx):
        return Epsilon3(*idx)


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr
    n: int = 0  # exponent for op == "pow"

    def children(self):
        return (self.arg,)

    def rebuild(self, kids):
        return Unary(self.op, kids[0], self.n)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr

    def children(self):
        return (self.lhs, self.rhs)

    def rebuild(self, kids):
        return Binary(self.op, kids[0], kids[1])


@dataclass(frozen=True)
class Sum(Expr):
    var: str
    bound: int
    body: Expr

    def children(self):
        return (self.body,)

    def rebuild(self, kids):
        return Sum(self.var, self.bound, kids[0])


@dataclass(frozen=True)
class Probe(Expr):
    field: Expr
    pos: Expr

    def children(self):
        return (self.field, self.pos)

    def rebuild(self, kids):
        return Probe(kids[0], kids[1])


@dataclass(frozen=True)
class Lift(Expr):
    body: Expr

    def children(self):
        return (self.body,)

    def rebuild(self, kids):
        return Lift(kids[0])


@dataclass(frozen=True)
class Conv(Expr):
    image: int
    alpha: tuple
    kernel: int
    beta: tuple = ()

    def indices(self):
        return self.alpha + self.beta

    def with_indices(self, idx):
        n = len(self.alpha)
        return Conv(self.image, tuple(idx[:n]), self.kernel, tuple(idx[n:]))

    def params(self):
        return (self.image, self.kernel)

    def with_params(self, f):
        return Conv(f(self.image), self.alpha, f(self.kernel), self.beta)


@dataclass(frozen=True)
class Partial(Expr):
    index: Index
    body: Expr

    def children(self):
        return (self.body,)

    def rebuild(self, kids):
        return Partial(self.index, kids[0])

    def indices(self):
        return (self.index,)

    def with_indices(self, idx):
        return Partial(idx[0], self.body)


@dataclass(frozen=True)
class ConstScalar(Expr):
    value: float


@dataclass(frozen=True)
class Voxel(Expr):
    """MidIR image sample ``V[base + tap + 1 - s, alpha]``."""

    image: int
    alpha: tuple
    taps: tuple
    base: int
    kernel: int

    def indices(self):
        return self.alpha + self.taps

    def with_indices(self, idx):
        n = len(self.alpha)
        return Voxel(self.image, tuple(idx[:n]), tuple(idx[n:]), self.base, self.kernel)

    def params(self):
        return (self.image, self.base, self.kernel)

    def with_params(self, f):
        return Voxel(f(self.image), self.alpha, self.taps, f(self.base), f(self.kernel))


@dataclass(frozen=True)
class KernelWeight(Expr):
    """MidIR kernel weight ``h^(r)(frac[axis] - (tap + 1 - s))``.

    The derivative order ``r`` is the number of entries of ``deriv`` equal to
    ``axis`` once all indices are concrete.
    """

    kernel: int
    axis: int
    deriv: tuple
    tap: Index
    frac: int

    def indices(self):
        return self.deriv + (self.tap,)

    def with_indices(self, idx):
        return KernelWeight(self.kernel, self.axis, tuple(idx[:-1]), idx[-1], self.frac)

    def params(self):
        return (self.kernel, self.frac)

    def with_params(self, f):
        return KernelWeight(f(self.kernel), self.axis, self.deriv, self.tap, f(self.frac))


ZERO = ConstScalar(0.0)
ONE = ConstScalar(1.0)


def neg(e):
    return Unary("neg", e)


def add(a, b):
    return Binary("add", a, b)


def sub(a, b):
    return Binary("sub", a, b)


def mul(a, b):
    return Binary("mul", a, b)


def div(a, b):
    return Binary("div", a, b)


def prod(factors: Sequence[Expr]) -> Expr:
    if not factors:
        return ONE
    out = factors[0]
    for f in factors[1:]:
        out = mul(out, f)
    return out


def sums(binders, body: Expr) -> Expr:
    for v, n in reversed(list(binders)):
        body = Sum(v, n, body)
    return body


# ---------------------------------------------------------------------------
# generic traversals

def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        x = stack.pop()
        yield x
        stack.extend(reversed(x.children()))


def node_count(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def transform(e: Expr, f: Callable[[Expr], Expr]) -> Expr:
    """Bottom-up rebuild applying ``f`` at every node."""
    kids = e.children()
    if kids:
        new = tuple(transform(k, f) for k in kids)
        if any(a is not b for a, b in zip(new, kids)):
            e = e.rebuild(new)
    return f(e)


def contains(e: Expr, pred: Callable[[Expr], bool]) -> bool:
    return any(pred(x) for x in walk(e))


def free_vars(e: Expr) -> set:
    if isinstance(e, Sum):
        return free_vars(e.body) - {e.var}
    out = {ix for ix in e.indices() if is_var(ix)}
    for k in e.children():
        out |= free_vars(k)
    return out


def all_vars(e: Expr) -> set:
    out = set()
    for x in walk(e):
        out.update(ix for ix in x.indices() if is_var(ix))
        if isinstance(x, Sum):
            out.add(x.var)
    return out


def rename_free(e: Expr, mapping: Mapping[str, Index]) -> Expr:
    """Replace free index variables.  The caller guarantees no capture."""
    if not mapping:
        return e
    if isinstance(e, Sum):
        if e.var in mapping:
            mapping = {k: v for k, v in mapping.items() if k != e.var}
        return Sum(e.var, e.bound, rename_free(e.body, mapping))
    idx = e.indices()
    if idx:
        new_idx = tuple(mapping.get(ix, ix) if is_var(ix) else ix for ix in idx)
        if new_idx != idx:
            e = e.with_indices(new_idx)
    kids = e.children()
    if kids:
        e = e.rebuild(tuple(rename_free(k, mapping) for k in kids))
    return e


def params_used(e: Expr) -> set:
    out = set()
    for x in walk(e):
        out.update(x.params())
    return out


def rename_params(e: Expr, f) -> Expr:
    if isinstance(f, Mapping):
        table = f
        f = lambda p: table.get(p, p)  # noqa: E731
    return transform(e, lambda x: x.with_params(f))


def fresh_name(base: str, used) -> str:
    base = base.rstrip("0123456789'_") or "i"
    if base not in used:
        return base
    n = 1
    while f"{base}{n}" in used:
        n += 1
    return f"{base}{n}"


def freshen_binders(e: Expr, avoid: set) -> Expr:
    """Rename every summation binder of ``e`` so none occurs in ``avoid``."""
    used = set(avoid) | all_vars(e)

    def go(x, mapping):
        if isinstance(x, Sum):
            v = x.var
            if v in avoid or v in mapping.values():
                nv = fresh_name(v, used)
                used.add(nv)
                mapping = {**mapping, v: nv}
                v = nv
            else:
                mapping = {k: w for k, w in mapping.items() if k != x.var}
            return Sum(v, x.bound, go(x.body, mapping))
        idx = x.indices()
        if idx and mapping:
            x = x.with_indices(tuple(mapping.get(ix, ix) if is_var(ix) else ix for ix in idx))
        kids = x.children()
        if kids:
            x = x.rebuild(tuple(go(k, mapping) for k in kids))
        return x

    return go(e, {})


def is_field_expr(e: Expr) -> bool:
    """True when ``e`` denotes a field (field nodes outside of any probe)."""
    if isinstance(e, (Field, Conv, Lift, Partial)):
        return True
    if isinstance(e, Probe):
        return False
    return any(is_field_expr(k) for k in e.children())


# ---------------------------------------------------------------------------
# operators and programs

@dataclass(frozen=True)
class EinOp:
    params: tuple
    body: Expr
    index: tuple = ()

    @property
    def shape(self) -> tuple:
        return tuple(n for _, n in self.index)

    @property
    def is_field(self) -> bool:
        return is_field_expr(self.body)

    def size(self) -> int:
        return node_count(self.body)


@dataclass(frozen=True)
class EinApp:
    op: EinOp
    args: tuple


@dataclass(frozen=True)
class Primitive:
    """Non-EIN right-hand side.

    kinds: ``image`` (attrs: input name), ``kernel`` (kernel name),
    ``const`` (flat values), ``position``, ``input`` (tensor input name),
    ``transform-matrix`` / ``transform-offset`` (args: image variable).
    """

    kind: str
    args: tuple = ()
    attrs: tuple = ()


@dataclass(frozen=True)
class Assign:
    lhs: str
    rhs: Union[EinApp, Primitive]


@dataclass
class SsaProgram:
    assigns: list
    types: dict
    outputs: list  # [(output name, ssa var)]
    inputs: list = field(default_factory=list)  # [(name, VarType)]
    domains: dict = field(default_factory=dict)  # output name -> position domain
    pos_dim: int = 0

    def defs(self) -> dict:
        return {a.lhs: a.rhs for a in self.assigns}

    def replace(self, assigns, types=None) -> "SsaProgram":
        return SsaProgram(list(assigns), dict(self.types if types is None else types),
                          list(self.outputs), list(self.inputs), dict(self.domains), self.pos_dim)

    def fresh_var(self, base="t") -> str:
        used = set(self.types)
        n = len(used)
        while f"{base}{n}" in used:
            n += 1
        return f"{base}{n}"

    def dce(self) -> "SsaProgram":
        live = {v for _, v in self.outputs}
        keep = []
        for a in reversed(self.assigns):
            if a.lhs in live or (isinstance(a.rhs, Primitive) and a.rhs.kind in ("image", "input", "position")):
                keep.append(a)
                live.update(a.rhs.args)
        keep.reverse()
        types = {a.lhs: self.types[a.lhs] for a in keep}
        return self.replace(keep, types)

    def einapps(self) -> Iterator[tuple]:
        for a in self.assigns:
            if isinstance(a.rhs, EinApp):
                yield a.lhs, a.rhs


def program_size(prog: SsaProgram) -> int:
    """Total EIN expression nodes over all assignments (primitives count 0)."""
    return sum(app.op.size() for _, app in prog.einapps())


# ---------------------------------------------------------------------------
# well-formedness

def _field_dim(e: Expr, params) -> int:
    for x in walk(e):
        if isinstance(x, Conv):
            return params[x.image].dim
        if isinstance(x, Field):
            return params[x.param].dim
    return 0


def check_wellformed(op: EinOp) -> None:
    """Raise a :class:`WellFormedError` subclass naming the offending index or
    parameter; return ``None`` when ``op`` is well formed."""
    params = op.params
    names = [v for v, _ in op.index]
    if len(set(names)) != len(names):
        raise ShapeMismatch(f"duplicate index variable in index map {names}")
    for v, n in op.index:
        if not is_var(v) or n < 1:
            raise ShapeMismatch(f"bad index map entry {v}<={n}")
    env = dict(op.index)

    def param(p, kind):
        if not isinstance(p, int) or not 0 <= p < len(params):
            raise UnboundParam(f"parameter {p} is not declared")
        if params[p].kind != kind:
            raise ShapeMismatch(f"parameter {p} is a {params[p].kind}, expected {kind}")
        return params[p]

    def index(ix, bound, what):
        if is_var(ix):
            if ix not in env:
                raise UnboundIndex(f"unbound index {ix} in {what}")
            if bound is not None and env[ix] != bound:
                raise ShapeMismatch(f"index {ix} ranges over {env[ix]} but {what} expects {bound}")
        else:
            if bound is not None and not 0 <= ix < bound:
                raise ShapeMismatch(f"constant index {ix} out of range {bound} in {what}")

    def indexed(idx, shape, what):
        if len(idx) != len(shape):
            raise ShapeMismatch(f"{what} has {len(idx)} indices but shape {list(shape)}")
        for ix, n in zip(idx, shape):
            index(ix, n, what)

    def go(e, in_field):
        if isinstance(e, Tensor):
            indexed(e.index, param(e.param, "tensor").shape, f"T{e.param}")
        elif isinstance(e, Field):
            if not in_field:
                raise ShapeMismatch(f"field parameter {e.param} used outside a field context")
            indexed(e.index, param(e.param, "field").shape, f"F{e.param}")
        elif isinstance(e, Delta):
            index(e.i, None, "delta")
            index(e.j, None, "delta")
            bi = env.get(e.i) if is_var(e.i) else None
            bj = env.get(e.j) if is_var(e.j) else None
            if bi is not None and bj is not None and bi != bj:
                raise ShapeMismatch(f"delta indices {e.i},{e.j} range over {bi} and {bj}")
        elif isinstance(e, (Epsilon2, Epsilon3)):
            n = 2 if isinstance(e, Epsilon2) else 3
            for ix in e.indices():
                if is_var(ix):
                    index(ix, None, "epsilon")
                    if env[ix] != n:
                        raise EpsilonDimMismatch(f"epsilon{n} index {ix} ranges over {env[ix]}")
                elif not 0 <= ix < n:
                    raise EpsilonDimMismatch(f"epsilon{n} constant index {ix}")
        elif isinstance(e, Sum):
            if e.var in env:
                raise ShapeMismatch(f"summation variable {e.var} shadows an enclosing binder")
            if e.bound < 1:
                raise ShapeMismatch(f"summation bound {e.bound}")
            env[e.var] = e.bound
            try:
                go(e.body, in_field)
            finally:
                del env[e.var]
        elif isinstance(e, Probe):
            if in_field:
                raise ShapeMismatch("probe inside a field expression")
            if not is_field_expr(e.field):
                raise ShapeMismatch("probe of a non-field expression")
            go(e.field, True)
            pos = e.pos
            if not isinstance(pos, Tensor) or pos.index != ():
                raise ShapeMismatch("probe position must be a whole tensor parameter")
            pt = param(pos.param, "tensor")
            d = _field_dim(e.field, params)
            if pt.shape != (d,):
                raise ShapeMismatch(f"probe position has shape {list(pt.shape)}, field dimension {d}")
        elif isinstance(e, Lift):
            if not in_field:
                raise ShapeMismatch("lift outside a field context")
            go(e.body, False)
        elif isinstance(e, Conv):
            img = param(e.image, "image")
            param(e.kernel, "kernel")
            indexed(e.alpha, img.shape, f"V{e.image}")
            if not in_field:
                raise ShapeMismatch("convolution outside a field context")
            for ix in e.beta:
                index(ix, img.dim, "kernel derivative")
        elif isinstance(e, Partial):
            if not in_field:
                raise ShapeMismatch("partial derivative outside a field context")
            d = _field_dim(e.body, params)
            index(e.index, d or None, "partial")
            go(e.body, True)
        elif isinstance(e, Voxel):
            img = param(e.image, "image")
            ker = param(e.kernel, "kernel")
            indexed(e.alpha, img.shape, f"V{e.image}")
            if len(e.taps) != img.dim:
                raise ShapeMismatch("voxel tap count differs from image dimension")
            for t in e.taps:
                index(t, 2 * ker.support, "tap")
            bt = param(e.base, "tensor")
            if bt.shape != (img.dim,):
                raise ShapeMismatch("voxel base must be a tensor[d]")
        elif isinstance(e, KernelWeight):
            ker = param(e.kernel, "kernel")
            index(e.tap, 2 * ker.support, "tap")
            ft = param(e.frac, "tensor")
            if len(ft.shape) != 1 or not 0 <= e.axis < ft.shape[0]:
                raise ShapeMismatch("kernel weight axis out of range")
            for ix in e.deriv:
                index(ix, ft.shape[0], "kernel derivative")
        elif isinstance(e, Unary):
            if e.op not in UNARY_OPS:
                raise WellFormedError(f"unknown unary operator {e.op}")
            go(e.arg, in_field)
        elif isinstance(e, Binary):
            if e.op not in BINARY_OPS:
                raise WellFormedError(f"unknown binary operator {e.op}")
            go(e.lhs, in_field)
            go(e.rhs, in_field)
        elif isinstance(e, ConstScalar):
            pass
        else:
            raise WellFormedError(f"unknown expression node {type(e).__name__}")

    go(op.body, op.is_field)


def check_program(prog: SsaProgram) -> None:
    defined = set()
    for a in prog.assigns:
        if a.lhs in defined:
            raise WellFormedError(f"{a.lhs} assigned twice")
        for v in a.rhs.args:
            if v not in defined:
                raise WellFormedError(f"{v} used before definition in {a.lhs}")
        if isinstance(a.rhs, EinApp):
            op = a.rhs.op
            if len(op.params) != len(a.rhs.args):
                raise ArityMismatch(f"{a.lhs}: {len(a.rhs.args)} arguments for {len(op.params)} parameters")
            for p, v in zip(op.params, a.rhs.args):
                t = prog.types[v]
                if p.kind != t.kind or p.shape != t.shape or (p.kind in ("field", "image") and p.dim != t.dim):
                    raise ShapeMismatch(f"{a.lhs}: argument {v} : {t} does not match parameter {p}")
            try:
                check_wellformed(op)
            except WellFormedError as exc:
                raise type(exc)(f"{a.lhs}: {exc}") from None
        defined.add(a.lhs)
    for _, v in prog.outputs:
        if v not in defined:
            raise WellFormedError(f"output {v} is not defined")


# ---------------------------------------------------------------------------
# shapes and substitution

def shape_of(e: Expr, context: Sequence[tuple]) -> list:
    """Free index variables of ``e`` with bounds, in binding-site order.

    ``context`` lists the binders in scope from the outside in: the
    operator's index map followed by the enclosing summations.
    """
    fv = free_vars(e)
    return [(v, n) for v, n in context if v in fv]


def substitute(host: Expr, param: int, replacement: Expr, formals: Sequence[str]) -> Expr:
    """Replace every ``T_beta`` / ``F_beta`` reference to ``param`` in ``host``
    by ``replacement`` with its free variables ``formals`` renamed positionally
    to ``beta``.  Summation binders of the replacement are freshened first."""
    formals = tuple(formals)
    avoid = all_vars(host)

    def go(e):
        if isinstance(e, (Tensor, Field)) and e.param == param:
            if len(e.index) != len(formals):
                raise ArityMismatch(
                    f"parameter {param} used with {len(e.index)} indices, replacement has {len(formals)}")
            actual_vars = {ix for ix in e.index if is_var(ix)}
            rep = freshen_binders(replacement, avoid | actual_vars | set(formals))
            return rename_free(rep, dict(zip(formals, e.index)))
        kids = e.children()
        if kids:
            new = tuple(go(k) for k in kids)
            if any(a is not b for a, b in zip(new, kids)):
                return e.rebuild(new)
        return e

    return go(host)


def rename_apart(op: EinOp, avoid: set) -> EinOp:
    """Alpha-rename an operator so none of its variables are in ``avoid``."""
    used = set(avoid) | all_vars(op.body) | {v for v, _ in op.index}
    mapping = {}
    new_index = []
    for v, n in op.index:
        if v in avoid:
            nv = fresh_name(v, used)
            used.add(nv)
            mapping[v] = nv
            v = nv
        new_index.append((v, n))
    body = rename_free(op.body, mapping)
    body = freshen_binders(body, set(avoid) | {v for v, _ in new_index})
    return EinOp(op.params, body, tuple(new_index))
