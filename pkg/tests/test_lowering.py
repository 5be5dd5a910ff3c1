import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einc.errors import BudgetExceeded, ContinuityExceeded, NotNormalized
from einc.evaluate import evaluate_program
from einc.executor import run
from einc.ir import Assign, Conv, EinApp, EinOp, Field, Partial, Primitive, Probe, SsaProgram, Tensor, Voxel, \
    field_t, image_t, kernel_t, tensor_t, walk
from einc.lowering import lower_high_to_mid, lower_mid_to_low
from einc.lowir import value_number_low
from einc.pipeline import compile_source
from einc.runtime import Image
from einc.sizemgmt import PassConfig

from support import CORPUS, CORPUS_IDS, corpus_source, high_norm, interior_points, random_bindings, random_image, \
    rel_err

TENT1 = "input image(1)[] img;\nfield#0(1)[] F = img ⊛ tent;\noutput real o = F(pos) over grid(1.5, 1.5, 1);\n"
CTMR3 = "input image(3)[] img;\nfield#1(3)[] F = img ⊛ ctmr;\noutput real o = F(pos) over grid(2.5, 4.5, 3);\n"


def test_tent_1d_interpolates():
    low = compile_source(TENT1).low
    img = Image.from_array(np.array([0.0, 2.0, 4.0, 6.0]), 1)
    assert run(low, {"img": img}, np.array([[1.5]]))["o"][0] == pytest.approx(3.0)
    assert low.count("voxel") == 2 and low.count("floor") == 1


def test_ctmr_3d_probe_counts():
    low = compile_source(CTMR3).low
    assert low.count("voxel") == 64
    assert low.count("kernel") == 12


def test_dot_arithmetic_before_vn():
    c = compile_source(corpus_source("dot"), PassConfig(enable_vn=False))
    assert c.low_raw.count("mul") == 3 and c.low_raw.count("add") == 2


def test_transpose_is_pure_data_movement():
    low = compile_source("input tensor[3,2] M;\noutput tensor[2,3] t = transpose(M) over grid([0], [0], [1]);\n").low
    assert {i.op for i in low.instrs} == {"input"}
    shape, ids = low.output("t")
    names = [low.instrs[k].attrs[1] for k in ids]
    assert names == [0, 2, 4, 1, 3, 5]


def test_continuity_exceeded():
    # two derivatives of a C1 kernel, built directly to bypass the typechecker
    img, ker = image_t(1, ()), kernel_t("ctmr", 1, 2)
    op = EinOp((tensor_t((1,)), img, ker), Probe(Conv(1, (), 2, ("i", "j")), Tensor(0, ())), (("i", 1), ("j", 1)))
    prog = SsaProgram(
        [Assign("pos", Primitive("position", (), ())), Assign("img", Primitive("image", (), ("img",))),
         Assign("h", Primitive("kernel", (), ("ctmr",))), Assign("o", EinApp(op, ("pos", "img", "h")))],
        {"pos": tensor_t((1,)), "img": img, "h": ker, "o": tensor_t((1, 1))}, [("o", "o")],
        [("img", img)], {"o": None}, 1)
    op2 = EinOp(op.params, Probe(Conv(1, (), 2, ("i", "j", "i")), Tensor(0, ())), op.index)
    bad = prog.replace(prog.assigns[:3] + [Assign("o", EinApp(op2, ("pos", "img", "h")))])
    lower_high_to_mid(prog)
    with pytest.raises(ContinuityExceeded):
        lower_high_to_mid(bad)


def test_not_normalized():
    img, ker = image_t(1, ()), kernel_t("ctmr", 1, 2)
    op = EinOp((tensor_t((1,)), img, ker), Probe(Partial("i", Conv(1, (), 2, ())), Tensor(0, ())), (("i", 1),))
    prog = SsaProgram(
        [Assign("pos", Primitive("position", (), ())), Assign("img", Primitive("image", (), ("img",))),
         Assign("h", Primitive("kernel", (), ("ctmr",))), Assign("o", EinApp(op, ("pos", "img", "h")))],
        {"pos": tensor_t((1,)), "img": img, "h": ker, "o": tensor_t((1,))}, [("o", "o")],
        [("img", img)], {"o": None}, 1)
    with pytest.raises(NotNormalized):
        lower_high_to_mid(prog)


def test_mid_has_no_fields():
    mid = lower_high_to_mid(high_norm(corpus_source("edge"), True))
    for _, app in mid.einapps():
        assert not any(isinstance(x, (Probe, Conv, Field)) for x in walk(app.op.body))
    assert any(isinstance(x, Voxel) for _, app in mid.einapps() for x in walk(app.op.body))


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        compile_source(corpus_source("stress"), PassConfig(enable_split=False))
    with pytest.raises(BudgetExceeded):
        compile_source(CTMR3, PassConfig(node_budget=50))


@pytest.mark.parametrize("path", CORPUS, ids=CORPUS_IDS)
def test_low_vn_idempotent(path):
    with open(path) as fh:
        low = compile_source(fh.read()).low
    again = value_number_low(low)
    assert len(again) == len(low)


@pytest.mark.parametrize("path", CORPUS, ids=CORPUS_IDS)
def test_low_matches_reference(path, rng):
    with open(path) as fh:
        src = fh.read()
    c = compile_source(src)
    b = random_bindings(c.high.inputs, rng)
    pts = interior_points(b, c.high.pos_dim, rng, 4)
    got = run(c.low, b, pts)
    for k, p in enumerate(pts):
        ref = evaluate_program(c.high, b, p)
        for name in ref:
            assert rel_err(got[name][k], ref[name]) < 1e-10


@pytest.mark.parametrize("kernel", ["ctmr", "bspln3"])
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_gradient_matches_finite_differences(kernel, seed):
    rng = np.random.default_rng(seed)
    head = f"input image(2)[] img;\nfield#1(2)[] F = img ⊛ {kernel};\n"
    val = compile_source(head + "output real f = F(pos) over grid(2.5, 4.5, 3);\n").low
    grad = compile_source(head + "output tensor[2] g = ∇F(pos) over grid(2.5, 4.5, 3);\n").low
    b = {"img": random_image(rng, 2)}
    pts = interior_points(b, 2, rng, 3, lo=2.2, hi=2.8)
    h = 1e-5
    g = run(grad, b, pts)["g"]
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        fd = (run(val, b, pts + e)["f"] - run(val, b, pts - e)["f"]) / (2 * h)
        np.testing.assert_allclose(g[:, axis], fd, rtol=1e-6, atol=1e-6)
