"""Recursive-descent parser for the surface language.

Precedence, loosest first: ``+ -``; ``* / • ⊗ × ⊛``; unary minus;
``^``; postfix probe/selection; prefix ``∇`` (so ``∇F(x)`` probes ``∇F``).
"""

from __future__ import annotations

from ..errors import SyntaxError_
from .lexer import Token, tokenize
from .syntax import (
    BinOp, Call, Grid, Identity, Literal, Name, Norm, Num, Points, Power, Program, Select, Stmt,
    TypeSpec, Unop,
)

_PREFIX_WORDS = ("grad", "curl", "div")
_MULOPS = {"*": "*", "/": "/", "dot": "dot", "outer": "outer", "cross": "cross", "conv": "conv"}


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text, kind=None) -> bool:
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "str"

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def fail(self, msg, t=None):
        t = t or self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise SyntaxError_(f"{msg}, found {found}", t.line, t.col)

    def expect(self, text) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.next()

    def integer(self) -> int:
        neg = False
        if self.at("-", "sym"):
            self.next()
            neg = True
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            self.fail("expected an integer")
        self.next()
        return -int(t.text) if neg else int(t.text)

    def number(self) -> float:
        neg = False
        if self.at("-", "sym"):
            self.next()
            neg = True
        t = self.tok
        if t.kind != "num":
            self.fail("expected a number")
        self.next()
        return -float(t.text) if neg else float(t.text)

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            self.fail("expected an identifier")
        return self.next().text

    # program structure
    def program(self) -> Program:
        stmts = []
        while self.tok.kind != "eof":
            stmts.append(self.statement())
        return Program(tuple(stmts))

    def statement(self) -> Stmt:
        t = self.tok
        at = (t.line, t.col)
        if self.at("input", "ident"):
            self.next()
            ty = self.type_spec()
            name = self.ident()
            self.expect(";")
            return Stmt("input", ty, name, at=at)
        if self.at("output", "ident"):
            self.next()
            ty = self.type_spec()
            name = self.ident()
            self.expect("=")
            e = self.expr()
            if not self.at("over", "ident"):
                self.fail("expected 'over'")
            self.next()
            dom = self.domain()
            self.expect(";")
            return Stmt("output", ty, name, e, dom, at=at)
        ty = self.type_spec()
        name = self.ident()
        self.expect("=")
        e = self.expr()
        self.expect(";")
        return Stmt("define", ty, name, e, at=at)

    def dims(self) -> tuple:
        self.expect("[")
        out = []
        if not self.at("]"):
            out.append(self.integer())
            while self.at(","):
                self.next()
                out.append(self.integer())
        self.expect("]")
        return tuple(out)

    def type_spec(self) -> TypeSpec:
        t = self.tok
        if t.kind != "ident" or t.text not in ("tensor", "real", "field", "image"):
            self.fail("expected a type")
        self.next()
        if t.text == "real":
            return TypeSpec("tensor", ())
        if t.text == "tensor":
            return TypeSpec("tensor", self.dims())
        if t.text == "field":
            self.expect("#")
            k = self.integer()
            self.expect("(")
            d = self.integer()
            self.expect(")")
            return TypeSpec("field", self.dims(), k=k, dim=d)
        self.expect("(")
        d = self.integer()
        self.expect(")")
        return TypeSpec("image", self.dims(), dim=d)

    def vec(self) -> tuple:
        if self.at("["):
            self.next()
            out = [self.number()]
            while self.at(","):
                self.next()
                out.append(self.number())
            self.expect("]")
            return tuple(out)
        return (self.number(),)

    def domain(self):
        if self.at("grid", "ident"):
            self.next()
            self.expect("(")
            lo = self.vec()
            self.expect(",")
            hi = self.vec()
            self.expect(",")
            counts = self.vec()
            self.expect(")")
            if any(c != int(c) or c < 1 for c in counts):
                self.fail("grid counts must be positive integers", self.toks[self.i - 2])
            return Grid(lo, hi, tuple(int(c) for c in counts))
        if self.at("points", "ident"):
            self.next()
            self.expect("(")
            t = self.tok
            if t.kind != "str":
                self.fail("expected a file name string")
            self.next()
            self.expect(")")
            return Points(t.text[1:-1])
        self.fail("expected 'grid' or 'points'")

    # expressions
    def expr(self):
        e = self.term()
        while self.at("+", "sym") or self.at("-", "sym"):
            t = self.next()
            e = BinOp(t.text, e, self.term(), at=(t.line, t.col))
        return e

    def term(self):
        e = self.unary()
        while True:
            t = self.tok
            if t.kind in ("sym", "op", "ident") and t.text in _MULOPS:
                self.next()
                e = BinOp(_MULOPS[t.text], e, self.unary(), at=(t.line, t.col))
            else:
                return e

    def unary(self):
        if self.at("-", "sym"):
            t = self.next()
            return Unop("neg", self.unary(), at=(t.line, t.col))
        return self.power()

    def power(self):
        e = self.postfix()
        if self.at("^", "sym"):
            t = self.next()
            e = Power(e, self.integer(), at=(t.line, t.col))
        return e

    def postfix(self):
        e = self.prefix()
        while True:
            t = self.tok
            if self.at("(", "sym"):
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.next()
                        args.append(self.expr())
                self.expect(")")
                if isinstance(e, Name) and e.id in _PREFIX_WORDS and len(args) == 1:
                    e = Unop(e.id, args[0], at=e.at)
                else:
                    e = Call(e, tuple(args), at=(t.line, t.col))
            elif self.at("[", "sym"):
                self.next()
                idx = [self.integer()]
                while self.at(","):
                    self.next()
                    idx.append(self.integer())
                self.expect("]")
                e = Select(e, tuple(idx), at=(t.line, t.col))
            else:
                return e

    def prefix(self):
        t = self.tok
        if t.kind == "op" and t.text == "grad":
            self.next()
            nxt = self.tok
            op = "grad"
            if nxt.kind == "op" and nxt.text in ("cross", "dot", "outer"):
                self.next()
                op = {"cross": "curl", "dot": "div", "outer": "grad"}[nxt.text]
            return Unop(op, self.prefix(), at=(t.line, t.col))
        return self.atom()

    def atom(self):
        t = self.tok
        at = (t.line, t.col)
        if t.kind == "num":
            self.next()
            is_int = t.text.isdigit()
            return Num(float(t.text), is_int, at=at)
        if t.kind == "ident":
            if t.text == "identity":
                self.next()
                self.expect("[")
                if self.tok.kind == "ident":
                    size = self.next().text
                else:
                    size = self.integer()
                self.expect("]")
                return Identity(size, at=at)
            if t.text in ("input", "output", "over", "grid", "points", "field", "tensor", "image", "real"):
                self.fail("unexpected keyword")
            self.next()
            return Name(t.text, at=at)
        if self.at("(", "sym"):
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("|", "sym"):
            self.next()
            e = self.expr()
            self.expect("|")
            return Norm(e, at=at)
        if self.at("[", "sym"):
            self.next()
            items = [self.expr()]
            while self.at(","):
                self.next()
                items.append(self.expr())
            self.expect("]")
            return Literal(tuple(items), at=at)
        self.fail("expected an expression")


def parse(src: str) -> Program:
    return Parser(src).program()


def parse_expr(src: str):
    p = Parser(src)
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail("trailing input")
    return e
