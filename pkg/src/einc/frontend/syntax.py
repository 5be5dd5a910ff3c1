"""Surface syntax tree.  Positions are excluded from equality so that
trees can be compared after a print/parse round trip."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Node:
    pass


def _pos():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Num(Node):
    value: float
    is_int: bool = False
    at: tuple = _pos()


@dataclass(frozen=True)
class Name(Node):
    id: str
    at: tuple = _pos()


@dataclass(frozen=True)
class Unop(Node):
    op: str  # neg grad curl div
    arg: Node
    at: tuple = _pos()


@dataclass(frozen=True)
class BinOp(Node):
    op: str  # + - * / dot outer cross conv
    lhs: Node
    rhs: Node
    at: tuple = _pos()


@dataclass(frozen=True)
class Power(Node):
    base: Node
    n: int
    at: tuple = _pos()


@dataclass(frozen=True)
class Norm(Node):
    arg: Node
    at: tuple = _pos()


@dataclass(frozen=True)
class Call(Node):
    fn: Node
    args: tuple
    at: tuple = _pos()


@dataclass(frozen=True)
class Select(Node):
    arg: Node
    index: tuple  # constant component indices
    at: tuple = _pos()


@dataclass(frozen=True)
class Literal(Node):
    items: tuple
    at: tuple = _pos()


@dataclass(frozen=True)
class Identity(Node):
    size: Union[int, str]
    at: tuple = _pos()


@dataclass(frozen=True)
class TypeSpec:
    kind: str  # tensor field image
    shape: tuple = ()
    k: int = 0
    dim: int = 0

    def __str__(self):
        sh = ",".join(map(str, self.shape))
        if self.kind == "tensor":
            return f"tensor[{sh}]"
        if self.kind == "field":
            return f"field#{self.k}({self.dim})[{sh}]"
        return f"image({self.dim})[{sh}]"


@dataclass(frozen=True)
class Grid:
    lo: tuple
    hi: tuple
    counts: tuple


@dataclass(frozen=True)
class Points:
    path: str


@dataclass(frozen=True)
class Stmt:
    kind: str  # input define output
    type: TypeSpec
    name: str
    expr: Optional[Node] = None
    domain: Optional[Union[Grid, Points]] = None
    at: tuple = _pos()


@dataclass(frozen=True)
class Program:
    stmts: tuple
