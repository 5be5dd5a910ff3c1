"""Size control for MidIR: operator splitting, summation binding and
value numbering, plus node counting at the pipeline's measurement points."""

from __future__ import annotations

from dataclasses import dataclass

from .high.fusion import tidy
from .ir import (
    Assign, Binary, ConstScalar, EinApp, EinOp, Primitive, SsaProgram, Sum, Tensor, Unary, Voxel, contains,
    free_vars, is_var,
    mul, node_count, program_size, rename_params, shape_of, tensor_t, transform,
)
from .printer import sexpr


@dataclass(frozen=True)
class PassConfig:
    enable_split: bool = True
    enable_slice: bool = True
    enable_shift: bool = True
    enable_vn: bool = True
    split_budget: int = 64
    node_budget: int = 100_000


# ---------------------------------------------------------------------------
# canonical forms

def _canon(e, free_order):
    """Rename free variables by ``free_order`` and binders by nesting order."""
    counter = [0]

    def go(x, bound):
        if isinstance(x, Sum):
            name = f"%b{counter[0]}"
            counter[0] += 1
            return Sum(name, x.bound, go(x.body, {**bound, x.var: name}))
        idx = x.indices()
        if idx:
            x = x.with_indices(tuple(
                (bound.get(i) or free_order.get(i, i)) if is_var(i) else i for i in idx))
        kids = x.children()
        if kids:
            x = x.rebuild(tuple(go(k, bound) for k in kids))
        return x

    return go(e, {})


def canonical_op(op: EinOp) -> EinOp:
    order = {v: f"%{k}" for k, (v, _) in enumerate(op.index)}
    return EinOp(op.params, _canon(op.body, order), tuple((order[v], n) for v, n in op.index))


def op_key(op: EinOp) -> str:
    c = canonical_op(op)
    params = " ".join(str(p) for p in c.params)
    return f"{params}|{c.index}|{sexpr(c.body)}"


def free_in_order(e) -> list:
    """Free index variables in first-occurrence (pre-order) order."""
    out = []

    def go(x, bound):
        if isinstance(x, Sum):
            go(x.body, bound | {x.var})
            return
        for i in x.indices():
            if is_var(i) and i not in bound and i not in out:
                out.append(i)
        for k in x.children():
            go(k, bound)

    go(e, frozenset())
    return out


# ---------------------------------------------------------------------------
# value numbering

def value_number(prog: SsaProgram) -> SsaProgram:
    """Merge assignments whose right-hand sides are equal up to renaming of
    index variables; redirect uses and drop dead code."""
    rep = {}
    table = {}
    out = []
    for a in prog.assigns:
        rhs = a.rhs
        args = tuple(rep.get(v, v) for v in rhs.args)
        if isinstance(rhs, EinApp):
            op, args = tidy(rhs.op, args)
            rhs = EinApp(op, args)
            key = ("ein", op_key(op), args)
        else:
            rhs = Primitive(rhs.kind, args, rhs.attrs)
            key = ("prim", rhs.kind, args, repr(rhs.attrs))
        if key in table:
            rep[a.lhs] = table[key]
            continue
        table[key] = a.lhs
        out.append(Assign(a.lhs, rhs))
    outputs = [(name, rep.get(v, v)) for name, v in prog.outputs]
    types = {a.lhs: prog.types[a.lhs] for a in out}
    return SsaProgram(out, types, outputs, list(prog.inputs), dict(prog.domains), prog.pos_dim).dce()


# ---------------------------------------------------------------------------
# summation binding

def _factors(e) -> list:
    if isinstance(e, Binary) and e.op == "mul":
        return _factors(e.lhs) + _factors(e.rhs)
    if isinstance(e, Unary) and e.op == "neg":
        return [ConstScalar(-1.0)] + _factors(e.arg)
    return [e]


def _product(fs):
    out = fs[0]
    for f in fs[1:]:
        out = mul(out, f)
    return out


def _bind(e):
    if not isinstance(e, Sum):
        return e
    fs = _factors(e.body)
    inv = [f for f in fs if e.var not in free_vars(f)]
    var = [f for f in fs if e.var in free_vars(f)]
    if not inv or not var:
        return e
    return mul(_product(inv), Sum(e.var, e.bound, _product(var)))


def summation_bind(op: EinOp) -> EinOp:
    """Hoist factors that do not mention a summation's index out of it."""
    return EinOp(op.params, transform(op.body, _bind), op.index)


# ---------------------------------------------------------------------------
# split

def _subterms(body, index):
    """(path, expr, context) for every proper subterm, pre-order."""
    out = []

    def go(x, path, ctx):
        if path:
            out.append((path, x, ctx))
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


def _sub_key(e, ctx) -> str:
    order = free_in_order(e)
    bounds = dict(ctx)
    names = {v: f"%{k}" for k, v in enumerate(order)}
    return f"{[bounds[v] for v in order]}|{sexpr(_canon(e, names))}"


_MIN_SPLIT = 3


def _extract(op: EinOp, args, occs, new_var):
    """Move the subterm at each occurrence into a new operator."""
    path0, e0, ctx0 = occs[0]
    shape = shape_of(e0, ctx0)
    order0 = free_in_order(e0)
    used = sorted({p for x in _walk(e0) for p in x.params()})
    remap = {p: k for k, p in enumerate(used)}
    sub = EinOp(tuple(op.params[p] for p in used), rename_params(e0, remap), tuple(shape))
    sub_args = tuple(args[p] for p in used)
    new_param = len(op.params)
    body = op.body
    for path, e, _ in sorted(occs, key=lambda o: o[0], reverse=True):
        corr = dict(zip(order0, free_in_order(e)))
        body = _replace_at(body, path, Tensor(new_param, tuple(corr[v] for v, _ in shape)))
    host = EinOp(op.params + (tensor_t(tuple(n for _, n in shape)),), body, op.index)
    host, host_args = tidy(host, tuple(args) + (new_var,))
    return (sub, sub_args), (host, host_args)


def _walk(e):
    stack = [e]
    while stack:
        x = stack.pop()
        yield x
        stack.extend(x.children())


def _pick(op: EinOp, budget: int):
    subs = [s for s in _subterms(op.body, op.index) if node_count(s[1]) >= _MIN_SPLIT]
    groups = {}
    for s in subs:
        groups.setdefault(_sub_key(s[1], s[2]), []).append(s)
    repeated = [g for g in groups.values() if len(g) > 1]
    if repeated:
        best = max(repeated, key=lambda g: (node_count(g[0][1]), -subs.index(g[0])))
        # occurrences nested in one another cannot both be replaced
        keep = []
        for o in best:
            if not any(o[0][:len(k[0])] == k[0] for k in keep):
                keep.append(o)
        if len(keep) > 1:
            return keep
    fitting = [s for s in subs if node_count(s[1]) <= budget]
    if not fitting:
        return None
    best = max(fitting, key=lambda s: (node_count(s[1]), -subs.index(s)))
    return [best]


def split_assignment(lhs: str, app: EinApp, types: dict, budget: int, fresh) -> list:
    """Split one assignment until every operator fits ``budget`` nodes."""
    done = []
    work = [(lhs, app.op, tuple(app.args))]
    while work:
        name, op, args = work.pop()
        if op.size() <= budget:
            done.append((name, op, args))
            continue
        occs = _pick(op, budget)
        if occs is None:
            done.append((name, op, args))
            continue
        new_var = fresh(name)
        (sub, sub_args), (host, host_args) = _extract(op, args, occs, new_var)
        types[new_var] = tensor_t(sub.shape)
        work.append((name, host, host_args))
        work.append((new_var, sub, sub_args))
    # definitions must precede uses
    done.reverse()
    order = []
    pending = list(done)
    defined = set(types) - {n for n, _, _ in done}
    while pending:
        for k, (n, op, args) in enumerate(pending):
            if all(a in defined for a in args):
                order.append(Assign(n, EinApp(op, args)))
                defined.add(n)
                pending.pop(k)
                break
        else:
            raise AssertionError("cyclic split")
    return order


def split(prog: SsaProgram, budget: int = 64) -> SsaProgram:
    types = dict(prog.types)
    counter = [0]

    def fresh(base):
        while True:
            counter[0] += 1
            name = f"{base}_s{counter[0]}"
            if name not in types:
                return name

    out = []
    for a in prog.assigns:
        if isinstance(a.rhs, EinApp) and a.rhs.op.size() > budget:
            out.extend(split_assignment(a.lhs, a.rhs, types, budget, fresh))
        else:
            out.append(a)
    return prog.replace(out, types)


def _is_jacobian(app: EinApp, defs) -> bool:
    if contains(app.op.body, lambda x: isinstance(x, Voxel)):
        return False
    return any(isinstance(defs.get(v), Primitive) and defs[v].kind == "transform-matrix" for v in app.args)


def bind_summations(prog: SsaProgram) -> SsaProgram:
    """Apply summation binding to every operator except world-space
    derivative corrections, which stay as flat sums of products so that
    symmetric derivative components lower to identical instructions."""
    defs = prog.defs()
    out = []
    for a in prog.assigns:
        if isinstance(a.rhs, EinApp) and not _is_jacobian(a.rhs, defs):
            a = Assign(a.lhs, EinApp(summation_bind(a.rhs.op), a.rhs.args))
        out.append(a)
    return prog.replace(out)


def size_manage(prog: SsaProgram, config: PassConfig) -> SsaProgram:
    if config.enable_split:
        prog = split(prog, config.split_budget)
    if config.enable_shift:
        prog = bind_summations(prog)
    if config.enable_vn:
        prog = value_number(prog)
    return prog


def measure_ir_size(prog) -> int:
    """EIN expression nodes of an SSA program, or instructions of a scalar program."""
    if isinstance(prog, SsaProgram):
        return program_size(prog)
    return len(prog.instrs)
