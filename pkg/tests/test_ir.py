import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einc.errors import ArityMismatch, EpsilonDimMismatch, ShapeMismatch, UnboundIndex, UnboundParam
from einc.evaluate import evaluate_op
from einc.ir import (
    Assign, ConstScalar, Delta, EinApp, EinOp, Epsilon3, Primitive, SsaProgram, Sum, Tensor, add, check_program,
    check_wellformed, free_vars, mul, node_count, program_size, shape_of, substitute, tensor_t,
)
from einc.printer import pretty, sexpr

V3 = tensor_t((3,))


def test_dot_wellformed():
    check_wellformed(EinOp((V3, V3), Sum("i", 3, mul(Tensor(0, ("i",)), Tensor(1, ("i",))))))
    check_wellformed(EinOp((V3, V3), mul(Tensor(0, ("i",)), Tensor(1, ("i",))), (("i", 3),)))


def test_unbound_index_named():
    with pytest.raises(UnboundIndex, match="j"):
        check_wellformed(EinOp((V3,), Tensor(0, ("j",)), (("i", 3),)))


def test_cross_wellformed():
    body = Sum("j", 3, Sum("k", 3, mul(mul(Epsilon3("i", "j", "k"), Tensor(0, ("j",))), Tensor(1, ("k",)))))
    check_wellformed(EinOp((V3, V3), body, (("i", 3),)))


def test_unbound_param():
    with pytest.raises(UnboundParam):
        check_wellformed(EinOp((V3,), Tensor(1, ("i",)), (("i", 3),)))


def test_shape_mismatches():
    with pytest.raises(ShapeMismatch):
        check_wellformed(EinOp((V3,), Tensor(0, ("i", "i")), (("i", 3),)))
    with pytest.raises(ShapeMismatch):
        check_wellformed(EinOp((V3,), Tensor(0, ("i",)), (("i", 4),)))
    with pytest.raises(ShapeMismatch):
        check_wellformed(EinOp((V3,), Tensor(0, (3,))))


def test_epsilon_dimension():
    with pytest.raises(EpsilonDimMismatch):
        check_wellformed(EinOp((), Epsilon3("i", "j", "k"), (("i", 2), ("j", 3), ("k", 3))))


def test_program_arity_and_order():
    op = EinOp((V3, V3), Sum("i", 3, mul(Tensor(0, ("i",)), Tensor(1, ("i",)))))
    types = {"u": V3, "d": tensor_t()}
    good = SsaProgram([Assign("u", Primitive("input", (), ("u", (3,)))), Assign("d", EinApp(op, ("u", "u")))],
                      types, [("d", "d")])
    check_program(good)
    with pytest.raises(ArityMismatch):
        check_program(good.replace([good.assigns[0], Assign("d", EinApp(op, ("u",)))]))
    with pytest.raises(Exception, match="before definition"):
        check_program(good.replace(list(reversed(good.assigns))))


def test_shape_of_examples():
    ctx = [("i", 4), ("j", 5)]
    assert shape_of(Tensor(0, ("j", "i")), ctx) == [("i", 4), ("j", 5)]
    assert shape_of(Sum("k", 6, Tensor(0, ("i", "k"))), ctx) == [("i", 4)]
    assert shape_of(ConstScalar(5.0), ctx) == []


def test_node_count_dot():
    op = EinOp((V3, V3), Sum("i", 3, mul(Tensor(0, ("i",)), Tensor(1, ("i",)))))
    assert op.size() == 4
    assert program_size(SsaProgram([], {}, [])) == 0


def test_substitute_positional():
    host = mul(Tensor(0, ("i",)), Tensor(1, ("i",)))
    rep = add(Tensor(2, ("j",)), Tensor(3, ("j",)))
    assert substitute(host, 1, rep, ["j"]) == mul(Tensor(0, ("i",)), add(Tensor(2, ("i",)), Tensor(3, ("i",))))


def test_substitute_constant_index(rng):
    host = Tensor(0, (0, "i"))
    rep = mul(Tensor(1, ("j",)), Tensor(2, ("k",)))
    out = substitute(host, 0, rep, ["j", "k"])
    assert out == mul(Tensor(1, (0,)), Tensor(2, ("i",)))
    a, b = rng.standard_normal(2), rng.standard_normal(2)
    op = EinOp((tensor_t((2, 2)), tensor_t((2,)), tensor_t((2,))), out, (("i", 2),))
    assert np.array_equal(evaluate_op(op, [None, a, b]), a[0] * b)


def test_substitute_avoids_capture():
    host = Sum("i", 3, mul(Tensor(0, ("i",)), Tensor(1, ("j",))))
    rep = Sum("i", 3, Tensor(2, ("a", "i")))
    out = substitute(host, 1, rep, ["a"])
    inner = out.body.rhs
    assert isinstance(inner, Sum) and inner.var not in ("i", "j")
    assert inner.body == Tensor(2, ("j", inner.var))
    assert free_vars(out) == {"j"}


def test_substitute_arity():
    with pytest.raises(ArityMismatch):
        substitute(Tensor(0, ("i", "j")), 0, Tensor(1, ("a",)), ["a"])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_substitute_preserves_value(seed):
    rng = np.random.default_rng(seed)
    M = tensor_t((3, 3))
    # host: Σ_k T_{i,k} W_k ; replacement for T: A_{a,b} + B_{b,a}
    host = EinOp((M, V3), Sum("k", 3, mul(Tensor(0, ("i", "k")), Tensor(1, ("k",)))), (("i", 3),))
    inner = EinOp((M, M), add(Tensor(0, ("a", "b")), Tensor(1, ("b", "a"))), (("a", 3), ("b", 3)))
    A, B, w = rng.standard_normal((3, 3)), rng.standard_normal((3, 3)), rng.standard_normal(3)
    let = evaluate_op(host, [evaluate_op(inner, [A, B]), w])
    body = substitute(host.body, 0, add(Tensor(2, ("a", "b")), Tensor(3, ("b", "a"))), ["a", "b"])
    fused = EinOp((M, V3, M, M), body, host.index)
    assert np.array_equal(evaluate_op(fused, [None, w, A, B]), let)


def test_pretty_and_sexpr():
    op = EinOp((V3, V3), Sum("i", 3, mul(Tensor(0, ("i",)), Tensor(1, ("i",)))))
    assert pretty(op, names={0: "U", 1: "V"}) == "λ(U,V)⟨Σ_{i≤3} U_{i} * V_{i}⟩_{}"
    assert pretty(op, ascii=True, names={0: "U", 1: "V"}).startswith("lambda(U,V)<sum_{i<=3}")
    assert sexpr(op) == "(ein (params (tensor (3)) (tensor (3))) (index ) (sum (i 3) (mul (T 0 (i)) (T 1 (i)))))"
    assert pretty(EinOp((), Delta(0, 1))) == "λ()⟨δ_{1,2}⟩_{}"


def test_node_count_counts_every_node():
    e = add(mul(Tensor(0, ()), ConstScalar(2.0)), Delta("i", "j"))
    assert node_count(e) == 5
