"""Type checking and flattening into the Simple AST.

Every operation is bound to its own temporary so that operators are only
ever applied to variables.  Shapes, dimensions and continuities are fully
resolved here; nothing downstream is polymorphic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import (
    ContinuityExhausted, DimMismatch, SurfaceShapeMismatch, TypeError_, UnknownIdentifier,
)
from ..ir import VarType, field_t, image_t, kernel_t, tensor_t
from ..runtime.kernels import KERNELS
from .syntax import BinOp, Call, Grid, Identity, Literal, Name, Norm, Num, Power, Program, Select, Unop

UNARY_FUNCS = ("sqrt", "exp", "sin", "cos", "tan", "asin", "acos", "atan")
TENSOR_FUNCS = ("trace", "transpose", "norm", "pow", "dot", "outer", "cross")


@dataclass(frozen=True)
class Binding:
    var: str
    op: str
    args: tuple
    type: VarType
    attrs: tuple = ()


@dataclass
class SimpleProgram:
    inputs: list = field(default_factory=list)  # [(name, VarType)]
    bindings: list = field(default_factory=list)
    outputs: list = field(default_factory=list)  # [(name, var, domain)]
    pos_dim: int = 0

    def types(self) -> dict:
        return {b.var: b.type for b in self.bindings}

    def dump(self) -> str:
        lines = ["(simple"]
        for name, t in self.inputs:
            lines.append(f"  (input {name} {t})")
        for b in self.bindings:
            attrs = "".join(f" {a!r}" for a in b.attrs)
            lines.append(f"  (let {b.var} {b.type} ({b.op} {' '.join(b.args)}{attrs}))".replace(" )", ")"))
        for name, var, dom in self.outputs:
            lines.append(f"  (output {name} {var} {dom!r})")
        lines.append(")")
        return "\n".join(lines) + "\n"


class Checker:
    def __init__(self, prog: Program):
        self.prog = prog
        self.out = SimpleProgram()
        self.scope = {}  # surface name -> ssa var
        self.types = {}
        self.counter = 0
        self.kernels = {}
        self.pos_var = None
        self.pos_dim = None

    def err(self, cls, msg, node):
        at = getattr(node, "at", None) or (None, None)
        raise cls(msg, *at)

    def emit(self, op, args, ty, attrs=(), var=None) -> str:
        if var is None:
            var = f"_t{self.counter}"
            self.counter += 1
        self.out.bindings.append(Binding(var, op, tuple(args), ty, tuple(attrs)))
        self.types[var] = ty
        return var

    # ------------------------------------------------------------------
    def run(self) -> SimpleProgram:
        self.pos_dim = self._infer_pos_dim()
        self.out.pos_dim = self.pos_dim or 0
        for s in self.prog.stmts:
            if s.name in self.scope or s.name in KERNELS or s.name == "pos":
                self.err(TypeError_, f"{s.name!r} is already defined", s)
            self._check_surface_type(s)
            if s.kind == "input":
                ty = self._vartype(s.type)
                if ty.kind == "field":
                    self.err(TypeError_, "fields cannot be inputs; declare an image", s)
                op = "image" if ty.kind == "image" else "input"
                attrs = (s.name,) if op == "image" else (s.name, ty.shape)
                self.scope[s.name] = self.emit(op, (), ty, attrs, var=s.name)
                self.out.inputs.append((s.name, ty))
                continue
            v = self.expr(s.expr)
            got = self.types[v]
            want = self._vartype(s.type)
            self._match(want, got, s)
            if want.kind == "field" and want.k != got.k:
                # declared continuity wins over the inferred one
                v = self.emit("retype", (v,), want)
            v = self._name(v, s.name)
            self.scope[s.name] = v
            if s.kind == "output":
                if want.kind != "tensor":
                    self.err(TypeError_, "outputs must be tensors", s)
                dom = s.domain
                if isinstance(dom, Grid):
                    dom = self._grid(dom, s)
                self.out.outputs.append((s.name, v, dom))
        if not self.out.outputs:
            raise TypeError_("program has no output")
        return self.out

    def _name(self, v, name):
        """Rename the temporary just produced so dumps show user names."""
        b = self.out.bindings[-1]
        if b.var == v and v.startswith("_t"):
            self.out.bindings[-1] = Binding(name, b.op, b.args, b.type, b.attrs)
            self.types[name] = self.types.pop(v)
            return name
        return v

    def _infer_pos_dim(self):
        dims = {s.type.dim for s in self.prog.stmts if s.kind == "input" and s.type.kind == "image"}
        if len(dims) == 1:
            return dims.pop()
        for s in self.prog.stmts:
            if s.kind == "output" and isinstance(s.domain, Grid):
                return max(len(s.domain.lo), len(s.domain.hi), len(s.domain.counts))
        return None

    def _grid(self, g: Grid, s) -> Grid:
        d = self.pos_dim or max(len(g.lo), len(g.hi), len(g.counts))

        def fit(v):
            if len(v) == 1:
                return tuple(v) * d
            if len(v) != d:
                self.err(DimMismatch, f"grid has {len(v)} coordinates, positions have {d}", s)
            return tuple(v)

        return Grid(fit(g.lo), fit(g.hi), fit(g.counts))

    def _check_surface_type(self, s):
        t = s.type
        if t.kind in ("field", "image") and not 1 <= t.dim <= 3:
            self.err(DimMismatch, f"dimension {t.dim} is not in 1..3", s)
        if any(n < 2 for n in t.shape):
            self.err(SurfaceShapeMismatch, f"shape dimensions must be at least 2 in {t}", s)
        if t.kind == "field" and t.k < 0:
            self.err(TypeError_, "negative continuity", s)

    @staticmethod
    def _vartype(t) -> VarType:
        if t.kind == "tensor":
            return tensor_t(t.shape)
        if t.kind == "field":
            return field_t(t.k, t.dim, t.shape)
        return image_t(t.dim, t.shape)

    def _match(self, want: VarType, got: VarType, node):
        if want.kind != got.kind:
            self.err(TypeError_, f"declared {want} but expression is {got}", node)
        if want.kind == "field" and want.dim != got.dim:
            self.err(DimMismatch, f"declared {want} but expression is {got}", node)
        if want.shape != got.shape:
            self.err(SurfaceShapeMismatch, f"declared {want} but expression is {got}", node)

    # ------------------------------------------------------------------
    def expr(self, e) -> str:
        if isinstance(e, Num):
            return self.emit("const", (), tensor_t(), ((), (e.value,)))
        if isinstance(e, Name):
            return self.name(e)
        if isinstance(e, Identity):
            n = e.size
            if isinstance(n, str):
                if n not in self.scope:
                    self.err(UnknownIdentifier, f"unknown identifier {n!r}", e)
                sh = self.types[self.scope[n]].shape
                if not sh:
                    self.err(SurfaceShapeMismatch, f"identity[{n}] needs a non-scalar {n}", e)
                n = sh[0]
            if n < 2:
                self.err(SurfaceShapeMismatch, "identity size must be at least 2", e)
            return self.emit("identity", (), tensor_t((n, n)), (n,))
        if isinstance(e, Literal):
            return self.literal(e)
        if isinstance(e, Unop):
            return self.unop(e)
        if isinstance(e, BinOp):
            return self.binop(e)
        if isinstance(e, Power):
            v = self.expr(e.base)
            t = self.types[v]
            self._scalar(t, e, "^")
            return self.emit("pow", (v,), t, (e.n,))
        if isinstance(e, Norm):
            v = self.expr(e.arg)
            t = self.types[v]
            self._value(t, e)
            return self.emit("norm", (v,), VarType(t.kind, (), t.dim, t.k))
        if isinstance(e, Select):
            v = self.expr(e.arg)
            t = self.types[v]
            self._value(t, e)
            if len(e.index) > len(t.shape) or any(not 0 <= c < n for c, n in zip(e.index, t.shape)):
                self.err(SurfaceShapeMismatch, f"index {list(e.index)} out of range for {t}", e)
            return self.emit("select", (v,), VarType(t.kind, t.shape[len(e.index):], t.dim, t.k), e.index)
        if isinstance(e, Call):
            return self.call(e)
        raise TypeError(type(e).__name__)

    def name(self, e: Name) -> str:
        if e.id == "pos":
            if self.pos_dim is None:
                self.err(DimMismatch, "cannot infer the dimension of pos", e)
            if self.pos_var is None:
                self.pos_var = self.emit("position", (), tensor_t((self.pos_dim,)), var="pos")
            return self.pos_var
        if e.id in KERNELS:
            if e.id not in self.kernels:
                k = KERNELS[e.id]
                self.kernels[e.id] = self.emit("kernel", (), kernel_t(k.name, k.continuity, k.support),
                                               (k.name,), var=k.name)
            return self.kernels[e.id]
        if e.id not in self.scope:
            self.err(UnknownIdentifier, f"unknown identifier {e.id!r}", e)
        return self.scope[e.id]

    def _value(self, t, node):
        if t.kind not in ("tensor", "field"):
            self.err(TypeError_, f"expected a tensor or field, found {t}", node)

    def _scalar(self, t, node, what):
        self._value(t, node)
        if t.shape:
            self.err(SurfaceShapeMismatch, f"{what} needs a scalar operand, found {t}", node)

    def _join(self, a: VarType, b: VarType, node):
        """Kind of a lifted binary result: field if either side is a field."""
        self._value(a, node)
        self._value(b, node)
        if a.kind == "field" and b.kind == "field":
            if a.dim != b.dim:
                self.err(DimMismatch, f"fields of dimension {a.dim} and {b.dim}", node)
            return "field", a.dim, min(a.k, b.k)
        if a.kind == "field":
            return "field", a.dim, a.k
        if b.kind == "field":
            return "field", b.dim, b.k
        return "tensor", 0, 0

    def literal(self, e: Literal) -> str:
        def flat(x):
            if isinstance(x, Num):
                return [x.value], ()
            if isinstance(x, Unop) and x.op == "neg" and isinstance(x.arg, Num):
                return [-x.arg.value], ()
            if isinstance(x, Literal):
                parts = [flat(i) for i in x.items]
                if any(p is None for p in parts) or len({p[1] for p in parts}) != 1:
                    return None
                return [v for p in parts for v in p[0]], (len(parts),) + parts[0][1]
            return None

        consts = flat(e)
        if consts is not None:
            values, shape = consts
            if any(n < 2 for n in shape):
                self.err(SurfaceShapeMismatch, "tensor literals need at least 2 entries", e)
            return self.emit("const", (), tensor_t(shape), (shape, tuple(values)))
        vs = [self.expr(i) for i in e.items]
        ts = [self.types[v] for v in vs]
        if len(vs) < 2:
            self.err(SurfaceShapeMismatch, "tensor literals need at least 2 entries", e)
        if any(t.kind != "tensor" for t in ts) or len({t.shape for t in ts}) != 1:
            self.err(SurfaceShapeMismatch, "literal entries must be tensors of one shape", e)
        return self.emit("cons", vs, tensor_t((len(vs),) + ts[0].shape))

    def unop(self, e: Unop) -> str:
        v = self.expr(e.arg)
        t = self.types[v]
        if e.op == "neg":
            self._value(t, e)
            return self.emit("neg", (v,), t)
        if t.kind != "field":
            self.err(TypeError_, f"{e.op} needs a field, found {t}", e)
        if t.k < 1:
            self.err(ContinuityExhausted, f"cannot differentiate {t}", e)
        d = t.dim
        if e.op == "grad":
            return self.emit("grad", (v,), field_t(t.k - 1, d, (d,) + t.shape))
        if e.op == "curl":
            if t.shape != (d,) or d not in (2, 3):
                self.err(SurfaceShapeMismatch, f"curl needs a 2-d or 3-d vector field, found {t}", e)
            return self.emit("curl", (v,), field_t(t.k - 1, d, (3,) if d == 3 else ()))
        if t.shape != (d,):
            self.err(SurfaceShapeMismatch, f"divergence needs a vector field of dimension {d}", e)
        return self.emit("divergence", (v,), field_t(t.k - 1, d, ()))

    def binop(self, e: BinOp) -> str:
        a, b = self.expr(e.lhs), self.expr(e.rhs)
        ta, tb = self.types[a], self.types[b]
        if e.op == "conv":
            if ta.kind != "image" or tb.kind != "kernel":
                self.err(TypeError_, "convolution needs an image on the left and a kernel on the right", e)
            return self.emit("conv", (a, b), field_t(tb.k, ta.dim, ta.shape))
        kind, d, k = self._join(ta, tb, e)
        sa, sb = ta.shape, tb.shape
        if e.op in ("+", "-"):
            if sa != sb:
                self.err(SurfaceShapeMismatch, f"cannot {'add' if e.op == '+' else 'subtract'} {ta} and {tb}", e)
            return self.emit("add" if e.op == "+" else "sub", (a, b), VarType(kind, sa, d, k))
        if e.op == "*":
            if sa and sb:
                self.err(SurfaceShapeMismatch, f"'*' needs a scalar operand; use • or ⊗ for {ta} and {tb}", e)
            if sa:  # keep the scalar first
                a, b, sa, sb = b, a, sb, sa
            return self.emit("scale", (a, b), VarType(kind, sb, d, k))
        if e.op == "/":
            if sb:
                self.err(SurfaceShapeMismatch, f"division by non-scalar {tb}", e)
            return self.emit("divide", (a, b), VarType(kind, sa, d, k))
        return self._product(e.op, a, b, kind, d, k, e)

    def _product(self, op, a, b, kind, d, k, node):
        ta, tb = self.types[a], self.types[b]
        sa, sb = ta.shape, tb.shape
        if op == "dot":
            if not sa or not sb or sa[-1] != sb[0]:
                self.err(SurfaceShapeMismatch, f"inner product of {ta} and {tb}", node)
            return self.emit("dot", (a, b), VarType(kind, sa[:-1] + sb[1:], d, k))
        if op == "outer":
            if not sa or not sb:
                self.err(SurfaceShapeMismatch, f"outer product of {ta} and {tb}", node)
            return self.emit("outer", (a, b), VarType(kind, sa + sb, d, k))
        if op == "cross":
            if sa != sb or sa not in ((2,), (3,)):
                self.err(SurfaceShapeMismatch, f"cross product of {ta} and {tb}", node)
            return self.emit("cross", (a, b), VarType(kind, (3,) if sa == (3,) else (), d, k))
        raise AssertionError(op)

    def call(self, e: Call) -> str:
        fn = e.fn
        if isinstance(fn, Name) and fn.id not in self.scope and fn.id != "pos":
            name = fn.id
            if name in UNARY_FUNCS:
                v = self._one(e)
                t = self.types[v]
                self._scalar(t, e, name)
                return self.emit("unary", (v,), t, (name,))
            if name in TENSOR_FUNCS:
                return self.builtin(name, e)
            if name not in KERNELS:
                self.err(UnknownIdentifier, f"unknown function {name!r}", e)
        v = self.expr(fn)
        t = self.types[v]
        if t.kind != "field":
            self.err(TypeError_, f"only fields can be probed, found {t}", e)
        if len(e.args) != 1:
            self.err(TypeError_, "a probe takes exactly one position", e)
        x = self.expr(e.args[0])
        tx = self.types[x]
        if tx.kind != "tensor" or tx.shape != (t.dim,):
            self.err(DimMismatch, f"probing {t} needs a tensor[{t.dim}] position, found {tx}", e)
        return self.emit("probe", (v, x), tensor_t(t.shape))

    def _arg(self, e: Call):
        if len(e.args) != 1:
            self.err(TypeError_, f"{e.fn.id} takes one argument", e)
        return e.args[0]

    def _one(self, e: Call) -> str:
        return self.expr(self._arg(e))

    def builtin(self, name, e: Call) -> str:
        if name == "pow":
            if len(e.args) != 2 or not isinstance(e.args[1], Num) or not e.args[1].is_int:
                self.err(TypeError_, "pow(e, n) needs an integer literal exponent", e)
            return self.expr(Power(e.args[0], int(e.args[1].value), at=e.at))
        if name == "norm":
            return self.expr(Norm(self._arg(e), at=e.at))
        if name in ("dot", "outer", "cross"):
            if len(e.args) != 2:
                self.err(TypeError_, f"{name} takes two arguments", e)
            return self.expr(BinOp(name, e.args[0], e.args[1], at=e.at))
        v = self._one(e)
        t = self.types[v]
        self._value(t, e)
        if len(t.shape) != 2 or (name == "trace" and t.shape[0] != t.shape[1]):
            self.err(SurfaceShapeMismatch, f"{name} needs a {'square ' if name == 'trace' else ''}matrix, found {t}", e)
        if name == "trace":
            return self.emit("trace", (v,), VarType(t.kind, (), t.dim, t.k))
        return self.emit("transpose", (v,), VarType(t.kind, (t.shape[1], t.shape[0]), t.dim, t.k))


def typecheck(prog: Program) -> SimpleProgram:
    return Checker(prog).run()
