"""C99 serialization of scalar programs.

One function is emitted per output::

    void <name>_<output>(const double *img_V, const int64_t *dims_V, const double *xform_V, ...,
                         const double *in_u, ..., const double *pos, double *out);

Images are passed in sorted name order, each as three pointers: voxel data in
file order (components fastest, then x, y, z), the spatial sizes, and the
world-to-index transform (the d×d matrix row-major followed by the offset).
Tensor inputs follow in sorted name order, then the world position and the
output buffer (row-major).  If the stencil of any probe leaves the image,
every output component is set to NaN.
"""

from __future__ import annotations

import os
import shutil
import subprocess

import numpy as np

from .lowir import ScalarProgram
from .runtime.kernels import get_kernel

STRICT_FLAGS = ("-std=c99", "-Wall", "-Wextra", "-Werror", "-pedantic")

_FUNC = {"sqrt": "sqrt", "exp": "exp", "sin": "sin", "cos": "cos", "tan": "tan", "asin": "asin",
         "acos": "acos", "atan": "atan", "floor": "floor"}


def _lit(x: float) -> str:
    s = repr(float(x))
    return s if ("." in s or "e" in s) else s + ".0"


def _kernel_fn(name: str, r: int) -> str:
    k = get_kernel(name)
    pieces = k.piece_coeffs(r)
    s = k.support
    lines = [f"static double k_{name}_{r}(double t)", "{",
             f"    if (t < {_lit(-s)} || t >= {_lit(s)}) return 0.0;"]
    for m, c in enumerate(pieces):
        horner = _lit(c[0]) if c else "0.0"
        for x in c[1:]:
            horner = f"({horner} * t + {_lit(x)})"
        if m < len(pieces) - 1:
            lines.append(f"    if (t < {_lit(m + 1 - s)}) return {horner};")
        else:
            lines.append(f"    return {horner};")
    lines.append("}")
    return "\n".join(lines)


def _signature(prog: ScalarProgram, fname: str) -> tuple:
    params = []
    names = []
    for img in sorted(prog.images):
        params += [f"const double *img_{img}", f"const int64_t *dims_{img}", f"const double *xform_{img}"]
        names += [f"img_{img}", f"dims_{img}", f"xform_{img}"]
    for name in sorted(prog.inputs):
        params.append(f"const double *in_{name}")
        names.append(f"in_{name}")
    params += ["const double *pos", "double *out"]
    names += ["pos", "out"]
    return f"void {fname}({', '.join(params)})", names


def _expr(prog, k, ins, v):
    op, a, at = ins.op, [v(x) for x in ins.args], ins.attrs
    if op == "const":
        return _lit(at[0])
    if op == "pos":
        return f"pos[{at[0]}]"
    if op == "input":
        return f"in_{at[0]}[{at[1]}]"
    if op == "xform":
        d = prog.images[at[0]][0]
        return f"xform_{at[0]}[{at[1] * d + at[2] if at[2] < d else d * d + at[1]}]"
    if op == "kernel":
        return f"k_{at[0]}_{at[1]}({a[0]} - {_lit(at[2])})"
    if op == "pow":
        return f"pow({a[0]}, {_lit(at[0])})"
    if op == "neg":
        return f"-{a[0]}"
    if op in _FUNC:
        return f"{_FUNC[op]}({a[0]})"
    if op in ("add", "mul"):
        return (" + " if op == "add" else " * ").join(a)
    if op == "sub":
        return f"{a[0]} - {a[1]}"
    if op == "div":
        return f"{a[0]} / {a[1]}"
    raise ValueError(f"unknown instruction {op}")


def _function(prog: ScalarProgram, fname: str, shape, ids) -> str:
    sig, names = _signature(prog, fname)
    cone = sorted(prog.cone(ids))
    body = [sig, "{"]
    body += [f"    (void){n};" for n in names if n != "out"]
    uses_voxels = False

    def v(x):
        return f"v{x}"

    for k in cone:
        ins = prog.instrs[k]
        if ins.op == "voxel":
            uses_voxels = True
            img, offs, comp = ins.attrs
            dim, vshape = prog.images[img]
            ncomp = int(np.prod(vshape, dtype=int))
            coords = []
            for axis, (base, off) in enumerate(zip(ins.args, offs)):
                c = f"i{k}_{axis}"
                body.append(f"    const int64_t {c} = (int64_t){v(base)} + {off};")
                body.append(f"    if ({c} < 0 || {c} >= dims_{img}[{axis}]) goto outside;")
                coords.append(c)
            addr = coords[-1]
            for axis in range(dim - 2, -1, -1):
                addr = f"{coords[axis]} + dims_{img}[{axis}] * ({addr})"
            body.append(f"    const double {v(k)} = img_{img}[{comp} + {ncomp} * ({addr})];")
        else:
            body.append(f"    const double {v(k)} = {_expr(prog, k, ins, v)};")
    for n, x in enumerate(ids):
        body.append(f"    out[{n}] = {v(x)};")
    if uses_voxels:
        body.append("    return;")
        body.append("outside:")
        body.append(f"    for (int n = 0; n < {max(len(ids), 1)}; n++) out[n] = NAN;")
    body.append("}")
    return "\n".join(body)


def emit_c(prog: ScalarProgram, name: str = "einc") -> str:
    """Self-contained C99 source with one function per output."""
    kernels = sorted({(i.attrs[0], i.attrs[1]) for i in prog.instrs if i.op == "kernel"})
    parts = ["/* generated by einc; see the module docstring of einc.cgen for the calling convention */",
             "#include <math.h>", "#include <stdint.h>", ""]
    parts += [_kernel_fn(n, r) + "\n" for n, r in kernels]
    for out, shape, ids in prog.outputs:
        parts.append(f"/* {out}: shape {list(shape)}, {len(ids)} doubles */")
        parts.append(_function(prog, f"{name}_{out}", shape, ids) + "\n")
    return "\n".join(parts)


def find_cc():
    return os.environ.get("CC") or shutil.which("cc") or shutil.which("gcc") or shutil.which("clang")


def compile_shared(source: str, workdir: str, stem: str = "einc", cc=None) -> str:
    """Compile C source into a shared library with strict warnings; returns its path."""
    cc = cc or find_cc()
    if cc is None:
        raise FileNotFoundError("no C compiler found")
    src = os.path.join(workdir, f"{stem}.c")
    lib = os.path.join(workdir, f"lib{stem}.so")
    with open(src, "w") as f:
        f.write(source)
    cmd = [cc, *STRICT_FLAGS, "-O1", "-shared", "-fPIC", src, "-o", lib, "-lm"]
    res = subprocess.run(cmd, capture_output=True, text=True)
    if res.returncode != 0:
        raise RuntimeError(f"C compilation failed:\n{res.stderr}")
    return lib


def call_shared(lib_path: str, prog: ScalarProgram, bindings: dict, positions, name: str = "einc") -> dict:
    """Run a compiled library at each position via ctypes (used for testing)."""
    import ctypes

    from .executor import bind_inputs

    lib = ctypes.CDLL(lib_path)
    vals = bind_inputs(prog, bindings)
    keep = []

    def ptr(arr, ctype):
        keep.append(arr)
        return arr.ctypes.data_as(ctypes.POINTER(ctype))

    fixed = []
    for img in sorted(prog.images):
        im = vals[img]
        fixed.append(ptr(np.ascontiguousarray(im.flat()), ctypes.c_double))
        fixed.append(ptr(np.array(im.sizes, dtype=np.int64), ctypes.c_int64))
        fixed.append(ptr(np.concatenate([im.A.reshape(-1), im.b]).astype(float), ctypes.c_double))
    for inp in sorted(prog.inputs):
        fixed.append(ptr(np.ascontiguousarray(vals[inp], dtype=float), ctypes.c_double))
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    out = {}
    for oname, shape, ids in prog.outputs:
        fn = getattr(lib, f"{name}_{oname}")
        fn.restype = None
        res = np.zeros((pos.shape[0], max(len(ids), 1)))
        for n in range(pos.shape[0]):
            p = np.ascontiguousarray(pos[n])
            buf = np.zeros(max(len(ids), 1))
            fn(*fixed, p.ctypes.data_as(ctypes.POINTER(ctypes.c_double)),
               buf.ctypes.data_as(ctypes.POINTER(ctypes.c_double)))
            res[n] = buf
        out[oname] = res[:, :len(ids)].reshape((pos.shape[0],) + tuple(shape))
    return out
