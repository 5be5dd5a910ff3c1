import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einc.errors import UnsupportedShape
from einc.evaluate import evaluate_op, evaluate_program
from einc.ir import Conv, Delta, EinApp, Epsilon3, Lift, Partial, Sum, Tensor, field_t, image_t, kernel_t, \
    mul, sums, tensor_t
from einc.translate import instantiate

from support import CORPUS, CORPUS_IDS, high, random_bindings, interior_points

T = tensor_t


def test_dot_is_explicit_sum():
    op = instantiate("dot", [T((3,)), T((3,))], T(()))
    assert op.body == Sum("i", 3, mul(Tensor(0, ("i",)), Tensor(1, ("i",))))
    assert op.index == ()


def test_cross_uses_epsilon():
    op = instantiate("cross", [T((3,)), T((3,))], T((3,)))
    i = op.index[0][0]
    assert op.body == sums([("j", 3), ("k", 3)], mul(mul(Epsilon3(i, "j", "k"), Tensor(0, ("j",))),
                                                     Tensor(1, ("k",))))


def test_transpose_swaps_indices():
    op = instantiate("transpose", [T((2, 3))], T((3, 2)))
    assert op.body == Tensor(0, ("j", "i")) and op.index == (("i", 3), ("j", 2))


def test_curl_of_field():
    F = field_t(2, 3, (3,))
    op = instantiate("curl", [F], field_t(1, 3, (3,)))
    assert op.body.body.body.rhs == Partial("j", op.body.body.body.rhs.body)


def test_identity_and_conv():
    assert instantiate("identity", [], T((3, 3))).body == Delta("i", "j")
    op = instantiate("conv", [image_t(3, (2,)), kernel_t("ctmr", 1, 2)], field_t(1, 3, (2,)))
    assert op.body == Conv(0, ("i",), 1, ())


def test_tensor_argument_of_field_op_is_lifted():
    op = instantiate("add", [field_t(1, 2, ()), T(())], field_t(1, 2, ()))
    assert op.body.rhs == Lift(Tensor(1, ()))


def test_unsupported_shapes():
    with pytest.raises(UnsupportedShape):
        instantiate("cross", [T((4,)), T((4,))], T((4,)))
    with pytest.raises(UnsupportedShape):
        instantiate("curl", [field_t(1, 4, (4,))], field_t(0, 4, (4,)))
    with pytest.raises(UnsupportedShape):
        instantiate("hodge", [T((3,))], T((3,)))


def _dense(name, args, attrs=()):
    if name == "add":
        return args[0] + args[1]
    if name == "sub":
        return args[0] - args[1]
    if name == "neg":
        return -args[0]
    if name == "scale":
        return args[0] * args[1]
    if name == "divide":
        return args[0] / args[1]
    if name == "dot":
        return np.tensordot(args[0], args[1], axes=1)
    if name == "outer":
        return np.multiply.outer(args[0], args[1])
    if name == "cross":
        return np.cross(args[0], args[1])
    if name == "trace":
        return np.trace(args[0])
    if name == "transpose":
        return args[0].T
    if name == "norm":
        return np.sqrt(np.sum(args[0] ** 2))
    if name == "cons":
        return np.stack(args)
    if name == "select":
        return args[0][tuple(attrs)]
    raise KeyError(name)


_CASES = [
    ("add", [(2, 3), (2, 3)], (2, 3), ()),
    ("sub", [(4,), (4,)], (4,), ()),
    ("neg", [(3, 3)], (3, 3), ()),
    ("scale", [(), (2, 2)], (2, 2), ()),
    ("divide", [(3,), ()], (3,), ()),
    ("dot", [(3,), (3,)], (), ()),
    ("dot", [(2, 3), (3,)], (2,), ()),
    ("dot", [(2, 3), (3, 4)], (2, 4), ()),
    ("outer", [(2,), (3,)], (2, 3), ()),
    ("outer", [(2, 2), (3,)], (2, 2, 3), ()),
    ("cross", [(3,), (3,)], (3,), ()),
    ("trace", [(4, 4)], (), ()),
    ("transpose", [(2, 3)], (3, 2), ()),
    ("norm", [(2, 3)], (), ()),
    ("cons", [(2,), (2,), (2,)], (3, 2), ()),
    ("select", [(3, 4)], (4,), (2,)),
    ("select", [(3, 4)], (), (1, 3)),
]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(_CASES), st.integers(0, 2**31))
def test_tensor_encodings_match_dense(case, seed):
    name, shapes, result, attrs = case
    rng = np.random.default_rng(seed)
    args = [rng.standard_normal(s) for s in shapes]
    if name == "divide":
        args[1] = np.asarray(1.5 + rng.random())
    op = instantiate(name, [T(s) for s in shapes], T(result), attrs)
    np.testing.assert_allclose(evaluate_op(op, args), _dense(name, args, attrs), rtol=1e-12, atol=1e-12)


def test_cross_2d_is_scalar(rng):
    a, b = rng.standard_normal(2), rng.standard_normal(2)
    op = instantiate("cross", [T((2,)), T((2,))], T(()))
    assert evaluate_op(op, [a, b]) == pytest.approx(a[0] * b[1] - a[1] * b[0])


@pytest.mark.parametrize("path", CORPUS, ids=CORPUS_IDS)
def test_corpus_translates_one_op_per_operation(path):
    with open(path) as fh:
        prog = high(fh.read())
    for _, app in prog.einapps():
        assert len(app.op.params) == len(app.args)
        assert [prog.types[a] for a in app.args] == list(app.op.params)


def test_translated_program_evaluates(rng):
    src = "input tensor[3] u;\ninput tensor[3] v;\noutput tensor[3] w = (u × v) + u over grid([0], [0], [1]);\n"
    prog = high(src)
    b = random_bindings(prog.inputs, rng)
    out = evaluate_program(prog, b, np.zeros(1))["w"]
    np.testing.assert_allclose(out, np.cross(b["u"], b["v"]) + b["u"], atol=1e-12)
