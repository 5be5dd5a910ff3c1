import re

import numpy as np
import pytest

from einc.cgen import call_shared, compile_shared, emit_c, find_cc
from einc.executor import run
from einc.pipeline import compile_source

from support import CORPUS, CORPUS_IDS, corpus_source, interior_points, random_bindings

needs_cc = pytest.mark.skipif(find_cc() is None, reason="no C compiler")


def _body(code, fname):
    start = code.index(f"void {fname}(")
    return code[start:code.index("\n}", start)]


def test_dot_arithmetic():
    body = _body(emit_c(compile_source(corpus_source("dot")).low, "dot"), "dot_d")
    assert body.count(" * ") == 3
    assert body.count(" + ") == 2


def test_tent_probe_code():
    src = "input image(1)[] img;\nfield#0(1)[] F = img ⊛ tent;\noutput real o = F(pos) over grid(1.5, 1.5, 1);\n"
    code = emit_c(compile_source(src).low, "tent")
    body = _body(code, "tent_o")
    assert body.count("floor(") == 1
    assert len(re.findall(r"img_img\[", body)) == 2
    assert "goto outside" in body and "NAN" in body


def test_signature_order():
    code = emit_c(compile_source(corpus_source("edge")).low, "edge")
    assert "void edge_e(const double *img_img, const int64_t *dims_img, const double *xform_img, " \
           "const double *pos, double *out)" in code


def test_emission_is_deterministic():
    src = corpus_source("helicity")
    assert emit_c(compile_source(src).low, "h") == emit_c(compile_source(src).low, "h")


@needs_cc
@pytest.mark.parametrize("path", CORPUS, ids=CORPUS_IDS)
def test_corpus_compiles_and_matches(path, tmp_path, rng):
    with open(path) as fh:
        low = compile_source(fh.read()).low
    lib = compile_shared(emit_c(low, "prog"), str(tmp_path), "prog")
    b = random_bindings([(n, t) for n, t in _inputs(low)], rng)
    pts = interior_points(b, low.pos_dim, rng, 10)
    got = call_shared(lib, low, b, pts, "prog")
    ref = run(low, b, pts)
    for name in ref:
        np.testing.assert_allclose(got[name], ref[name], rtol=1e-12, atol=1e-12)


def _inputs(low):
    from einc.ir import image_t, tensor_t
    for n, (dim, shape) in low.images.items():
        yield n, image_t(dim, shape)
    for n, shape in low.inputs.items():
        yield n, tensor_t(shape)


@needs_cc
def test_out_of_domain_writes_nan(tmp_path):
    from einc.runtime import Image
    src = "input image(1)[] img;\nfield#0(1)[] F = img ⊛ tent;\noutput real o = F(pos) over grid(0, 3, 4);\n"
    low = compile_source(src).low
    lib = compile_shared(emit_c(low, "t"), str(tmp_path), "t")
    img = Image.from_array(np.array([1.0, 2.0, 3.0, 4.0]), 1)
    out = call_shared(lib, low, {"img": img}, np.array([[1.5], [7.0]]), "t")["o"]
    assert out[0] == pytest.approx(2.5) and np.isnan(out[1])
