"""Surface syntax printer; output re-parses to an equal tree."""

from __future__ import annotations

from .syntax import BinOp, Call, Grid, Identity, Literal, Name, Norm, Num, Power, Program, Select, Unop

_UNI = {"dot": "•", "outer": "⊗", "cross": "×", "conv": "⊛", "grad": "∇", "curl": "∇×", "div": "∇•"}
_ASC = {"dot": " dot ", "outer": " outer ", "cross": " cross ", "conv": " conv "}


def _num(v: float, is_int: bool) -> str:
    return str(int(v)) if is_int else repr(float(v))


def unparse_expr(e, ascii=False) -> str:
    def go(e) -> str:
        if isinstance(e, Num):
            return _num(e.value, e.is_int)
        if isinstance(e, Name):
            return e.id
        if isinstance(e, Identity):
            return f"identity[{e.size}]"
        if isinstance(e, Unop):
            if e.op == "neg":
                return f"-({go(e.arg)})"
            if ascii:
                return f"{e.op}({go(e.arg)})"
            return f"{_UNI[e.op]}({go(e.arg)})"
        if isinstance(e, BinOp):
            sym = e.op if e.op in "+-*/" else (_ASC[e.op] if ascii else _UNI[e.op])
            if sym in "+-*/":
                sym = f" {sym} "
            return f"({go(e.lhs)}{sym}{go(e.rhs)})"
        if isinstance(e, Power):
            return f"({go(e.base)})^{e.n}"
        if isinstance(e, Norm):
            return f"|{go(e.arg)}|"
        if isinstance(e, Call):
            return f"({go(e.fn)})({', '.join(go(a) for a in e.args)})"
        if isinstance(e, Select):
            return f"({go(e.arg)})[{','.join(map(str, e.index))}]"
        if isinstance(e, Literal):
            return "[" + ", ".join(go(a) for a in e.items) + "]"
        raise TypeError(type(e).__name__)

    return go(e)


def _vec(v) -> str:
    return "[" + ", ".join(repr(float(x)) if not isinstance(x, int) else str(x) for x in v) + "]"


def unparse(prog: Program, ascii=False) -> str:
    lines = []
    for s in prog.stmts:
        ty = str(s.type)
        if s.kind == "input":
            lines.append(f"input {ty} {s.name};")
        elif s.kind == "define":
            lines.append(f"{ty} {s.name} = {unparse_expr(s.expr, ascii)};")
        else:
            d = s.domain
            if isinstance(d, Grid):
                dom = f"grid({_vec(d.lo)}, {_vec(d.hi)}, {_vec(d.counts)})"
            else:
                dom = f'points("{d.path}")'
            lines.append(f"output {ty} {s.name} = {unparse_expr(s.expr, ascii)} over {dom};")
    return "\n".join(lines) + "\n"
