"""Surface language: parsing, printing and type checking."""

from .parser import parse, parse_expr
from .typecheck import Binding, SimpleProgram, typecheck
from .unparse import unparse, unparse_expr


def load_source(src: str) -> SimpleProgram:
    return typecheck(parse(src))


__all__ = ["Binding", "SimpleProgram", "load_source", "parse", "parse_expr", "typecheck", "unparse",
           "unparse_expr"]
