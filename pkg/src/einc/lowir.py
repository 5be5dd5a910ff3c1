"""Scalar straight-line programs (LowIR).

Every instruction produces one double.  Instructions refer to earlier ones
by position; ``group`` records the SSA variable the instruction was lowered
from, which keeps vector structure visible for debugging and code
generation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# op -> meaning of attrs
#   const   (value,)
#   pos     (axis,)
#   input   (name, flat index)
#   xform   (image name, row, col)   world-to-index matrix entry; col == dim is the offset
#   voxel   (image name, offsets, component)   args: integer base per axis
#   kernel  (kernel name, order, shift)   args: (frac,)  value h^(order)(frac - shift)
#   pow     (n,)
#   neg sqrt exp sin cos tan asin acos atan floor   ()
#   add mul (n-ary)   sub div (binary)
COMMUTATIVE = ("add", "mul")
UNARY = ("neg", "sqrt", "exp", "sin", "cos", "tan", "asin", "acos", "atan", "floor", "pow")


@dataclass(frozen=True)
class Instr:
    op: str
    args: tuple = ()
    attrs: tuple = ()
    group: str = ""


@dataclass
class ScalarProgram:
    instrs: list
    outputs: list  # [(name, shape, flat instruction ids)]
    images: dict = field(default_factory=dict)  # input name -> (dim, shape)
    inputs: dict = field(default_factory=dict)  # tensor input name -> shape
    pos_dim: int = 0
    domains: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.instrs)

    def count(self, op: str) -> int:
        return sum(1 for i in self.instrs if i.op == op)

    def cone(self, roots) -> set:
        """Ids of every instruction the given roots depend on (inclusive)."""
        seen = set()
        stack = list(roots)
        while stack:
            k = stack.pop()
            if k in seen:
                continue
            seen.add(k)
            stack.extend(self.instrs[k].args)
        return seen

    def output(self, name):
        for n, shape, ids in self.outputs:
            if n == name:
                return shape, ids
        raise KeyError(name)

    def dump(self) -> str:
        lines = []
        for k, ins in enumerate(self.instrs):
            args = " ".join(f"%{a}" for a in ins.args)
            attrs = " ".join(repr(a) for a in ins.attrs)
            lines.append(f"%{k} = {ins.op} {attrs} {args}".rstrip() + (f"    ; {ins.group}" if ins.group else ""))
        for name, shape, ids in self.outputs:
            lines.append(f"output {name} {list(shape)} = " + " ".join(f"%{i}" for i in ids))
        return "\n".join(lines) + "\n"


def _dce(instrs, outputs):
    live = set()
    for _, _, ids in outputs:
        live.update(ids)
    for k in range(len(instrs) - 1, -1, -1):
        if k in live:
            live.update(instrs[k].args)
    remap = {}
    kept = []
    for k, ins in enumerate(instrs):
        if k in live:
            remap[k] = len(kept)
            kept.append(Instr(ins.op, tuple(remap[a] for a in ins.args), ins.attrs, ins.group))
    outs = [(n, s, tuple(remap[i] for i in ids)) for n, s, ids in outputs]
    return kept, outs


def value_number_low(prog: ScalarProgram) -> ScalarProgram:
    """Hash-consing with commutative normalization, then dead-code removal.

    Nested additions and multiplications are flattened into one n-ary
    instruction with sorted operands, so sums accumulated in different
    orders are recognized as equal.
    """
    new = []
    table = {}
    remap = {}
    for k, ins in enumerate(prog.instrs):
        args = tuple(remap[a] for a in ins.args)
        if ins.op in COMMUTATIVE:
            flat = []
            for a in args:
                if new[a].op == ins.op:
                    flat.extend(new[a].args)
                else:
                    flat.append(a)
            args = tuple(sorted(flat))
        key = (ins.op, args, ins.attrs)
        if key in table:
            remap[k] = table[key]
            continue
        table[key] = len(new)
        remap[k] = len(new)
        new.append(Instr(ins.op, args, ins.attrs, ins.group))
    outputs = [(n, s, tuple(remap[i] for i in ids)) for n, s, ids in prog.outputs]
    instrs, outputs = _dce(new, outputs)
    return ScalarProgram(instrs, outputs, dict(prog.images), dict(prog.inputs), prog.pos_dim, dict(prog.domains))
