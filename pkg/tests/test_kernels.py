import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from einc.errors import DerivativeOrderExceeded, UnknownIdentifier
from einc.runtime import KERNELS, eval_kernel, get_kernel


def test_tent_half():
    assert eval_kernel(get_kernel("tent"), 0, 0.5) == 0.5


def test_ctmr_interpolates():
    h = get_kernel("ctmr")
    assert h(0.0) == 1.0
    for t in (-2.0, -1.0, 1.0, 2.0):
        assert h(t) == 0.0


def test_bspln3_partition_at_point_three():
    h = get_kernel("bspln3")
    assert abs(sum(h(0.3 - i) for i in range(-2, 3)) - 1.0) < 1e-15


@pytest.mark.parametrize("name", ["tent", "bspln3"])
def test_partition_of_unity_1000_points(name, rng):
    h = get_kernel(name)
    for t in rng.uniform(-5, 5, 1000):
        total = sum(h(t - i) for i in range(math.floor(t) - 3, math.floor(t) + 4))
        assert abs(total - 1.0) < 1e-12


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_zero_outside_support(name):
    h = get_kernel(name)
    s = h.support
    for r in range(h.max_order + 1):
        assert h(s + 0.01, r) == 0.0
        assert h(-s - 0.01, r) == 0.0


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_derivatives_match_finite_differences(name, rng):
    h = get_kernel(name)
    eps = 1e-6
    for r in range(h.max_order):
        for t in rng.uniform(-h.support, h.support, 200):
            if abs(t - round(t)) < 1e-3:
                continue  # knots: derivatives may jump
            fd = (h(t + eps, r) - h(t - eps, r)) / (2 * eps)
            assert abs(fd - h(t, r + 1)) < 1e-6 * (1 + abs(fd))


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_continuity_at_knots(name):
    h = get_kernel(name)
    for r in range(h.continuity + 1):
        for m in range(-h.support, h.support + 1):
            left, right = h(m - 1e-12, r), h(m, r)
            assert abs(left - right) < 1e-9


def test_order_limit():
    with pytest.raises(DerivativeOrderExceeded):
        eval_kernel(get_kernel("tent"), 2, 0.2)
    assert get_kernel("ctmr").max_order == 2
    assert get_kernel("bspln3").max_order == 3


def test_unknown_kernel():
    with pytest.raises(UnknownIdentifier):
        get_kernel("gauss")


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(sorted(KERNELS)), st.floats(-3, 3), st.integers(0, 2))
def test_array_matches_scalar(name, t, r):
    h = get_kernel(name)
    r = min(r, h.max_order)
    assert h.eval_array(r, np.array([t]))[0] == pytest.approx(h(t, r), abs=1e-15)


def test_kernel_symmetry(rng):
    for name in KERNELS:
        h = get_kernel(name)
        for t in rng.uniform(-2, 2, 50):
            if abs(abs(t) - round(abs(t))) < 1e-9:
                continue
            assert h(t) == pytest.approx(h(-t), abs=1e-14)
            if h.max_order >= 1:
                assert h(t, 1) == pytest.approx(-h(-t, 1), abs=1e-13)
