import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einc.errors import ContinuityExhausted, DimMismatch, FrontendError, SurfaceShapeMismatch, SyntaxError_, \
    TypeError_, UnknownIdentifier
from einc.frontend import load_source, parse, parse_expr, unparse, unparse_expr
from einc.frontend.syntax import BinOp, Unop
from einc.ir import field_t, tensor_t

from support import CORPUS, CORPUS_IDS

HEAD = "input image(3)[] img;\nfield#2(3)[] F = img ⊛ bspln3;\n"


def _types(src):
    prog = load_source(src)
    return {b.var: b.type for b in prog.bindings}


def test_edge_definition_parses():
    e = parse_expr("-∇(|∇F|) • ∇F/|∇F|")
    # • and / share a precedence level and associate left
    assert isinstance(e, BinOp) and e.op == "/"
    assert e.lhs.op == "dot" and isinstance(e.lhs.lhs, Unop) and e.lhs.lhs.op == "neg"


def test_helicity_definition_parses():
    e = parse_expr("(V/|V|) • (∇×V/|∇×V|)")
    assert isinstance(e, BinOp) and e.op == "dot"
    assert isinstance(e.rhs.lhs, Unop) and e.rhs.lhs.op == "curl"


def test_empty_expression_is_syntax_error():
    with pytest.raises(SyntaxError_) as exc:
        parse("tensor[3] x = ;")
    assert exc.value.line == 1 and exc.value.col == 15


def test_ascii_aliases_match_unicode():
    assert parse_expr("grad(F) dot grad(G)") == parse_expr("∇F • ∇G")
    assert parse_expr("u outer v") == parse_expr("u ⊗ v")
    assert parse_expr("u cross v") == parse_expr("u × v")
    assert parse_expr("img conv ctmr") == parse_expr("img ⊛ ctmr")
    assert parse_expr("curl(V)") == parse_expr("∇×V")


def test_gradient_type():
    t = _types(HEAD + "field#1(3)[3] G = ∇F;\noutput tensor[3] g = G(pos) over grid(2.5, 4.5, 3);\n")
    assert t["G"] == field_t(1, 3, (3,))


def test_trace_of_tensor_field():
    src = ("input image(3)[3,3] t;\nfield#4(3)[3,3] T = t ⊛ bspln3;\nfield#4(3)[] R = trace(T);\n"
           "output real r = R(pos) over grid(2.5, 4.5, 3);\n")
    assert _types(src)["R"] == field_t(4, 3, ())


def test_differentiating_c0_field():
    src = "input image(3)[] img;\nfield#0(3)[] F = img ⊛ tent;\nfield#0(3)[3] G = ∇F;\n"
    with pytest.raises(ContinuityExhausted):
        load_source(src)


def test_unknown_identifier_has_position():
    with pytest.raises(UnknownIdentifier) as exc:
        load_source(HEAD + "field#2(3)[] G = F + Q;\n")
    assert exc.value.line == 3


def test_dimension_and_shape_errors():
    with pytest.raises(DimMismatch):
        load_source("input image(2)[] a;\ninput image(3)[] b;\nfield#1(2)[] F = a ⊛ ctmr;\n"
                    "field#1(3)[] G = b ⊛ ctmr;\nfield#1(2)[] H = F + G;\n")
    with pytest.raises(SurfaceShapeMismatch):
        load_source("input tensor[1] u;\n")
    with pytest.raises(TypeError_):
        load_source("input tensor[3] u;\ninput tensor[2] v;\ntensor[3] w = u + v;\n")


def test_unknown_kernel():
    with pytest.raises(UnknownIdentifier):
        load_source("input image(1)[] a;\nfield#1(1)[] F = a ⊛ gauss;\n")


@pytest.mark.parametrize("path", CORPUS, ids=CORPUS_IDS)
def test_corpus_round_trips(path):
    with open(path) as fh:
        ast = parse(fh.read())
    assert parse(unparse(ast)) == ast
    assert parse(unparse(ast, ascii=True)) == ast


_names = st.sampled_from(["F", "G", "u", "v"])
_leaf = st.one_of(_names, st.integers(0, 9).map(str), st.sampled_from(["2.5", "0.5"]))


def _expr(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*", "/", "•", "⊗", "×"]), children)
          .map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        children.map(lambda c: f"-{c}"),
        children.map(lambda c: f"∇({c})"),
        children.map(lambda c: f"|{c}|"),
        children.map(lambda c: f"sqrt({c})"),
        st.tuples(children, st.integers(2, 4)).map(lambda t: f"({t[0]})^{t[1]}"),
        children.map(lambda c: f"({c})(pos)"),
    )


@settings(max_examples=200, deadline=None)
@given(st.recursive(_leaf, _expr, max_leaves=8), st.booleans())
def test_expression_round_trip(src, ascii):
    e = parse_expr(src)
    assert parse_expr(unparse_expr(e, ascii)) == e


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="FGuv01()[]+-*/∇•⊗×|;=. \n", max_size=30))
def test_typecheck_total(text):
    try:
        load_source(HEAD + text)
    except FrontendError:
        pass


def test_tensor_program_types():
    t = _types("input tensor[3] u;\ninput tensor[3] v;\ntensor[3,3] m = u ⊗ v;\nreal s = trace(m);\n"
               "output real o = s over grid(0, 0, 1);\n")
    assert t["m"] == tensor_t((3, 3)) and t["s"] == tensor_t(())
