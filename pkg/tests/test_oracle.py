import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einc.errors import OutOfDomain
from einc.runtime import Image, get_kernel, oracle_probe

from support import random_image

V = Image.from_array(np.array([1.0, 2.0, 4.0, 8.0]))
TENT = get_kernel("tent")


def test_tent_between_samples():
    assert oracle_probe(V, TENT, (), [1.5]) == pytest.approx(3.0, abs=1e-15)


def test_tent_on_sample():
    assert oracle_probe(V, TENT, (), [2.0]) == pytest.approx(4.0, abs=1e-15)


def test_tent_slope():
    assert oracle_probe(V, TENT, (0,), [1.5]) == pytest.approx(2.0, abs=1e-15)


def test_out_of_domain_and_clamp():
    with pytest.raises(OutOfDomain):
        oracle_probe(V, get_kernel("ctmr"), (), [0.5])
    # clamped: taps -1..2 read V[0], V[0], V[1], V[2]
    h = get_kernel("ctmr")
    expect = sum(h(0.5 - i) * V.data[min(max(i, 0), 3)] for i in range(-1, 3))
    assert oracle_probe(V, h, (), [0.5], border="clamp") == pytest.approx(expect)


def test_world_transform_scales_derivative():
    # index x = 2p: dF/dp = 2 dF/dx
    img = Image.from_array(V.data, 1, [[2.0]], [0.0])
    assert oracle_probe(img, TENT, (0,), [0.75]) == pytest.approx(4.0)


def test_tensor_valued_shape(rng):
    img = random_image(rng, 2, (2, 3))
    p = img.to_world([3.2, 2.7])
    assert oracle_probe(img, get_kernel("bspln3"), (1,), p).shape == (2, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["tent", "ctmr", "bspln3"]), st.integers(1, 3),
       st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, kname, d, a, b):
    rng = np.random.default_rng(seed)
    A = np.eye(d) + 0.2 * rng.standard_normal((d, d))
    v1, v2 = rng.standard_normal((2,) + (6,) * d)
    h = get_kernel(kname)
    p = np.linalg.solve(A, rng.uniform(2.2, 2.8, d))
    beta = tuple(rng.integers(0, d, size=min(h.max_order, 1)))
    mk = lambda data: Image.from_array(data, d, A)  # noqa: E731
    lhs = oracle_probe(mk(a * v1 + b * v2), h, beta, p)
    rhs = a * oracle_probe(mk(v1), h, beta, p) + b * oracle_probe(mk(v2), h, beta, p)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(a) + abs(b)) * 10


@pytest.mark.parametrize("kname", ["ctmr", "bspln3"])
def test_derivative_matches_central_difference(kname, rng):
    h = get_kernel(kname)
    for d in (1, 2, 3):
        img = random_image(rng, d, (), size=6)
        for _ in range(5):
            x = rng.uniform(2.1, 2.9, d)
            p = img.to_world(x)
            for j in range(d):
                e = np.zeros(d)
                e[j] = 1e-4
                fd = (oracle_probe(img, h, (), p + e) - oracle_probe(img, h, (), p - e)) / 2e-4
                assert abs(oracle_probe(img, h, (j,), p) - fd) <= 1e-5 * (1 + abs(fd))
