from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SyntaxError_

# ASCII spellings of the operator glyphs
GLYPHS = {"∇": "grad", "•": "dot", "⊗": "outer", "×": "cross", "⊛": "conv"}

KEYWORDS = {"input", "output", "field", "tensor", "image", "real", "over", "grid", "points", "identity"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<str>"[^"\n]*")
  | (?P<ident>[A-Za-z][A-Za-z0-9_']*)
  | (?P<sym>[-+*/^()\[\],;=|#∇•⊗×⊛])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # num str ident sym eof
    text: str
    line: int
    col: int


def tokenize(src: str) -> list:
    out = []
    line, start, i = 1, 0, 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if not m:
            raise SyntaxError_(f"unexpected character {src[i]!r}", line, i - start + 1)
        kind = m.lastgroup
        text = m.group()
        col = i - start + 1
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind in ("num", "str", "ident", "sym"):
            if kind == "sym" and text in GLYPHS:
                kind, text = "op", GLYPHS[text]
            out.append(Token(kind, text, line, col))
        i = m.end()
    out.append(Token("eof", "", line, i - start + 1))
    return out
