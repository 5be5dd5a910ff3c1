"""Vectorized execution of scalar programs over many positions at once."""

from __future__ import annotations

import numpy as np

from .errors import BindingError, DivideByZero, OutOfDomain
from .lowir import ScalarProgram
from .runtime.image import Image
from .runtime.kernels import get_kernel

_UFUNC = {"neg": np.negative, "sqrt": np.sqrt, "exp": np.exp, "sin": np.sin, "cos": np.cos, "tan": np.tan,
          "asin": np.arcsin, "acos": np.arccos, "atan": np.arctan, "floor": np.floor}


def bind_inputs(prog: ScalarProgram, bindings: dict) -> dict:
    """Check and normalize input values against the program's declarations."""
    out = {}
    for name, (dim, shape) in prog.images.items():
        img = bindings.get(name)
        if img is None:
            raise BindingError(f"no image bound to input {name!r}")
        if not isinstance(img, Image):
            raise BindingError(f"input {name!r} must be an image")
        if img.dim != dim:
            raise BindingError(f"image {name!r} is {img.dim}-d, program expects {dim}-d")
        if img.shape != shape:
            try:
                img = img.with_shape(shape)
            except Exception:
                raise BindingError(f"image {name!r} has voxel shape {list(img.shape)}, "
                                   f"program expects {list(shape)}") from None
        out[name] = img
    for name, shape in prog.inputs.items():
        if name not in bindings:
            raise BindingError(f"no value bound to input {name!r}")
        v = np.asarray(bindings[name], dtype=float).reshape(-1)
        if v.size != int(np.prod(shape, dtype=int)):
            raise BindingError(f"input {name!r} has {v.size} values, expected shape {list(shape)}")
        out[name] = v
    return out


def _last_uses(prog):
    last = {}
    for k, ins in enumerate(prog.instrs):
        for a in ins.args:
            last[a] = k
    for _, _, ids in prog.outputs:
        for i in ids:
            last[i] = len(prog.instrs)
    return last


def run(prog: ScalarProgram, bindings: dict, positions, border: str = "error", ieee: bool = False) -> dict:
    """Evaluate ``prog`` at every row of ``positions`` (shape ``(N, d)``).

    Returns ``{output name: array of shape (N, *output shape)}``.
    ``border`` is ``"error"`` (raise :class:`OutOfDomain`) or ``"clamp"``
    (clamp voxel indices to the image).
    """
    if border not in ("error", "clamp"):
        raise ValueError(f"unknown border mode {border!r}")
    vals = bind_inputs(prog, bindings)
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 1:
        pos = pos.reshape(-1, max(prog.pos_dim, 1)) if prog.pos_dim else pos.reshape(-1, 1)
    n = pos.shape[0]
    if prog.pos_dim and pos.shape[1] != prog.pos_dim:
        raise BindingError(f"positions have {pos.shape[1]} coordinates, program expects {prog.pos_dim}")
    last = _last_uses(prog)
    reg = {}
    with np.errstate(all="ignore"):
        for k, ins in enumerate(prog.instrs):
            op, a, at = ins.op, [reg[x] for x in ins.args], ins.attrs
            if op == "const":
                v = np.full(n, at[0])
            elif op == "pos":
                v = pos[:, at[0]].copy()
            elif op == "input":
                v = np.full(n, vals[at[0]][at[1]])
            elif op == "xform":
                img = vals[at[0]]
                v = np.full(n, img.b[at[1]] if at[2] == img.dim else img.A[at[1], at[2]])
            elif op == "voxel":
                img = vals[at[0]]
                idx = []
                for axis, (base, off) in enumerate(zip(a, at[1])):
                    size = img.sizes[axis]
                    c = np.where(np.isfinite(base), base, -1).astype(np.int64) + off
                    out = (c < 0) | (c >= size)
                    if out.any():
                        if border == "error":
                            first = int(np.argmax(out))
                            raise OutOfDomain(
                                f"position {first} needs voxel {int(c[first])} on axis {axis} "
                                f"of image {at[0]!r} (size {size})", first)
                        c = np.clip(c, 0, size - 1)
                    idx.append(c)
                comp = np.unravel_index(at[2], img.shape) if img.shape else ()
                v = img.data[tuple(idx) + tuple(comp)]
            elif op == "kernel":
                v = get_kernel(at[0]).eval_array(at[1], a[0] - at[2])
            elif op == "pow":
                v = a[0] ** at[0]
            elif op in _UFUNC:
                v = _UFUNC[op](a[0])
            elif op == "add":
                v = a[0].copy()
                for x in a[1:]:
                    v += x
            elif op == "mul":
                v = a[0].copy()
                for x in a[1:]:
                    v *= x
            elif op == "sub":
                v = a[0] - a[1]
            elif op == "div":
                zero = a[1] == 0
                if zero.any() and not ieee:
                    first = int(np.argmax(zero))
                    raise DivideByZero(f"division by zero in {ins.group or 'program'} at position {first}")
                v = a[0] / a[1]
            else:
                raise ValueError(f"unknown instruction {op}")
            reg[k] = v
            for x in set(ins.args):
                if last.get(x) == k:
                    del reg[x]
    out = {}
    for name, shape, ids in prog.outputs:
        arr = np.stack([reg[i] for i in ids], axis=1) if ids else np.zeros((n, 0))
        out[name] = arr.reshape((n,) + tuple(shape))
    return out
