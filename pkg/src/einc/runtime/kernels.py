"""Separable reconstruction kernels as piecewise cubic (or linear) polynomials.

Each kernel ``h`` has half-support ``s``: it is zero outside ``[-s, s)`` and
polynomial on every unit interval ``[m, m+1)``.  Derivatives are analytic
piecewise polynomials; a kernel of continuity ``C^k`` is evaluated
piecewise up to order ``k + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DerivativeOrderExceeded, UnknownIdentifier


@dataclass(frozen=True)
class Kernel:
    name: str
    support: int  # half-width s
    continuity: int
    pieces: tuple  # polynomial coefficients (highest power first), one per [m, m+1), m = -s..s-1
    _derivs: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @property
    def max_order(self) -> int:
        return self.continuity + 1

    def piece_coeffs(self, r: int) -> tuple:
        """Coefficient tuples of the r-th derivative, one per unit interval."""
        if r > self.max_order:
            raise DerivativeOrderExceeded(
                f"kernel {self.name} supports derivatives up to order {self.max_order}, asked for {r}")
        if r not in self._derivs:
            out = []
            for c in self.pieces:
                p = np.poly1d(c)
                for _ in range(r):
                    p = p.deriv()
                out.append(tuple(float(x) for x in p.coeffs))
            self._derivs[r] = tuple(out)
        return self._derivs[r]

    def __call__(self, t: float, r: int = 0) -> float:
        return eval_kernel(self, r, t)

    def eval_array(self, r: int, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        pieces = self.piece_coeffs(r)
        m = np.floor(t).astype(int) + self.support
        out = np.zeros_like(t)
        for k, c in enumerate(pieces):
            sel = m == k
            if np.any(sel):
                out[sel] = np.polyval(c, t[sel])
        return out


def eval_kernel(kernel: Kernel, r: int, t: float) -> float:
    """Value of the r-th derivative of ``kernel`` at ``t`` (0 outside the support)."""
    pieces = kernel.piece_coeffs(r)
    m = math.floor(t) + kernel.support
    if not 0 <= m < len(pieces):
        return 0.0
    acc = 0.0
    for c in pieces[m]:
        acc = acc * t + c
    return acc


def _tent():
    return Kernel("tent", 1, 0, ((1.0, 1.0), (-1.0, 1.0)))


def _ctmr():
    # Catmull-Rom spline (a = -1/2)
    return Kernel("ctmr", 2, 1, (
        (0.5, 2.5, 4.0, 2.0),     # [-2,-1):  0.5t^3 + 2.5t^2 + 4t + 2
        (-1.5, -2.5, 0.0, 1.0),   # [-1, 0): -1.5t^3 - 2.5t^2 + 1
        (1.5, -2.5, 0.0, 1.0),    # [ 0, 1):  1.5t^3 - 2.5t^2 + 1
        (-0.5, 2.5, -4.0, 2.0),   # [ 1, 2): -0.5t^3 + 2.5t^2 - 4t + 2
    ))


def _bspln3():
    return Kernel("bspln3", 2, 2, (
        (1 / 6, 1.0, 2.0, 4 / 3),     # (2+t)^3/6
        (-0.5, -1.0, 0.0, 2 / 3),     # 2/3 - t^2 - t^3/2
        (0.5, -1.0, 0.0, 2 / 3),      # 2/3 - t^2 + t^3/2
        (-1 / 6, 1.0, -2.0, 4 / 3),   # (2-t)^3/6
    ))


KERNELS = {k.name: k for k in (_tent(), _ctmr(), _bspln3())}


def get_kernel(name: str) -> Kernel:
    try:
        return KERNELS[name]
    except KeyError:
        raise UnknownIdentifier(f"unknown kernel {name!r} (known: {', '.join(KERNELS)})") from None
