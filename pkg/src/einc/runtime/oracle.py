"""Direct evaluation of a convolution probe.

This is deliberately naive: it loops over every stencil tap and every
world-to-index Jacobian term, using nothing from the compiler.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import OutOfDomain
from .image import Image
from .kernels import Kernel, eval_kernel


def oracle_probe(image: Image, kernel: Kernel, beta=(), p=(), border: str = "error") -> np.ndarray:
    """Value of ``d^|beta| F / dp_beta`` at world point ``p`` for ``F = image * kernel``.

    Returns an array of shape ``image.shape``.
    """
    d = image.dim
    s = kernel.support
    p = np.asarray(p, dtype=float).reshape(d)
    x = image.A @ p + image.b
    n = [math.floor(v) for v in x]
    f = [x[k] - n[k] for k in range(d)]
    sizes = image.sizes
    beta = tuple(beta)

    taps = range(1 - s, s + 1)
    if border == "error":
        for k in range(d):
            if n[k] + 1 - s < 0 or n[k] + s > sizes[k] - 1:
                raise OutOfDomain(f"probe at {p.tolist()} needs samples outside axis {k} of size {sizes[k]}")

    out = np.zeros(image.shape)
    # world derivative along beta_t = sum_j A[j, beta_t] * index derivative along j
    for js in itertools.product(range(d), repeat=len(beta)):
        jac = 1.0
        for j, bt in zip(js, beta):
            jac *= image.A[j, bt]
        if jac == 0.0:
            continue
        orders = [js.count(k) for k in range(d)]
        acc = np.zeros(image.shape)
        for off in itertools.product(taps, repeat=d):
            w = 1.0
            for k in range(d):
                w *= eval_kernel(kernel, orders[k], f[k] - off[k])
            idx = []
            for k in range(d):
                c = n[k] + off[k]
                if border == "clamp":
                    c = min(max(c, 0), sizes[k] - 1)
                idx.append(c)
            acc = acc + w * image.data[tuple(idx)]
        out = out + jac * acc
    return out
