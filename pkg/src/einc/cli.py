"""Command line interface: ``einc compile | run | dump-ir``.

Exit status is 0 on success, 1 for diagnostics about the input program or
data, and 2 when the compiler itself fails.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .cgen import emit_c
from .errors import BindingError, EinError, InternalError
from .executor import run
from .frontend.syntax import Grid
from .pipeline import STAGES, compile_source
from .positions import domain_positions, grid_positions, load_points, parse_grid
from .printer import pretty_expr
from .runtime.nrrd import load_nrrd, write_nrrd
from .sizemgmt import PassConfig


def _add_pass_flags(p):
    p.add_argument("--no-split", action="store_true", help="disable operator splitting and probe isolation")
    p.add_argument("--no-slice", action="store_true", help="disable probe slicing")
    p.add_argument("--no-shift", action="store_true", help="disable summation binding")
    p.add_argument("--no-vn", action="store_true", help="disable value numbering")
    p.add_argument("--split-budget", type=int, default=64, metavar="N",
                   help="split operators with more than N nodes (default 64)")
    p.add_argument("--node-budget", type=int, default=100_000, metavar="N",
                   help="abort when the scalar program exceeds N instructions (default 100000)")


def _config(a) -> PassConfig:
    return PassConfig(enable_split=not a.no_split, enable_slice=not a.no_slice, enable_shift=not a.no_shift,
                      enable_vn=not a.no_vn, split_budget=a.split_budget, node_budget=a.node_budget)


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise BindingError(f"cannot read {path}: {exc.strerror}") from None


def _tracer(stream):
    def trace(rule, before, after):
        stream.write(f"{rule}: {pretty_expr(before, ascii=True)}  =>  {pretty_expr(after, ascii=True)}\n")
    return trace


def cmd_compile(a) -> int:
    trace = _tracer(sys.stderr) if a.trace_rewrites else None
    try:
        res = compile_source(_read(a.file), _config(a), trace, a.file)
    except EinError as exc:
        if a.stats and getattr(exc, "report", None) is not None:
            with open(a.stats, "w") as fh:
                fh.write(exc.report.to_json())
        raise
    if a.emit_c:
        name = os.path.splitext(os.path.basename(a.emit_c))[0].replace("-", "_") or "einc"
        with open(a.emit_c, "w") as fh:
            fh.write(emit_c(res.low, name))
    if a.stats:
        with open(a.stats, "w") as fh:
            fh.write(res.report.to_json())
    for s in res.report.sizes:
        print(f"{s['point']:>16}  {s['ir']:<4} {s['nodes']:>8}")
    return 0


def _bind(specs, prog):
    out = {}
    for spec in specs or ():
        if "=" not in spec:
            raise BindingError(f"--input {spec!r} must be name=path")
        name, path = spec.split("=", 1)
        if name in prog.images:
            out[name] = load_nrrd(path)
        elif name in prog.inputs:
            out[name] = np.loadtxt(path, dtype=float, ndmin=1)
        else:
            raise BindingError(f"program has no input named {name!r}")
    return out


def _write(path, fmt, name, values, positions, grid):
    if fmt == "csv":
        flat = values.reshape(values.shape[0], -1)
        d = positions.shape[1]
        cols = [f"p{k}" for k in range(d)] + ([name] if flat.shape[1] == 1 and values.ndim == 1
                                              else [f"{name}{list(np.unravel_index(k, values.shape[1:]))}"
                                                    .replace(" ", "") for k in range(flat.shape[1])])
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for p, v in zip(positions, flat):
                fh.write(",".join(repr(float(x)) for x in list(p) + list(v)) + "\n")
        return
    if grid is not None:
        counts = tuple(int(c) for c in grid.counts)
        data = values.reshape(counts + values.shape[1:])
        step = [(hi - lo) / (n - 1) if n > 1 else 1.0 for lo, hi, n in zip(grid.lo, grid.hi, counts)]
        write_nrrd(path, data, len(counts), np.diag(step), grid.lo)
    else:
        write_nrrd(path, values, 1)


def cmd_run(a) -> int:
    res = compile_source(_read(a.file), _config(a), None, a.file)
    prog = res.low
    bindings = _bind(a.input, prog)
    d = max(prog.pos_dim, 1)
    outputs = list(prog.outputs)
    for i, (name, _, _) in enumerate(outputs):
        grid = None
        if a.grid:
            grid = parse_grid(a.grid, d)
            pos = grid_positions(grid)
        elif a.points:
            pos = load_points(a.points, d)
        else:
            dom = prog.domains.get(name)
            grid = dom if isinstance(dom, Grid) else None
            pos = domain_positions(dom, d)
        values = run(prog, bindings, pos, a.border, a.ieee)[name]
        path = a.output
        if len(outputs) > 1:
            stem, ext = os.path.splitext(a.output)
            path = f"{stem}_{name}{ext}"
        _write(path, a.format, name, values, pos, grid)
    return 0


def cmd_dump_ir(a) -> int:
    res = compile_source(_read(a.file), _config(a), None, a.file, until=a.stage)
    sys.stdout.write(res.dump(a.stage))
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are diagnostics (status 1); status 2 is kept for compiler failures
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="einc", description="Compiler for tensor-field programs.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("compile", help="compile a program and report IR sizes")
    c.add_argument("file")
    _add_pass_flags(c)
    c.add_argument("--emit-c", metavar="OUT.c")
    c.add_argument("--stats", metavar="OUT.json")
    c.add_argument("--trace-rewrites", action="store_true", help="log every rewrite to stderr")
    c.set_defaults(fn=cmd_compile)

    r = sub.add_parser("run", help="evaluate a program at a set of positions")
    r.add_argument("file")
    r.add_argument("--input", action="append", metavar="NAME=PATH")
    g = r.add_mutually_exclusive_group()
    g.add_argument("--grid", metavar="LO,HI,COUNTS")
    g.add_argument("--points", metavar="FILE")
    r.add_argument("--output", required=True, metavar="OUT")
    r.add_argument("--format", choices=("nrrd", "csv"), default="nrrd")
    r.add_argument("--border", choices=("error", "clamp"), default="error")
    r.add_argument("--ieee", action="store_true", help="let division by zero produce inf/NaN")
    _add_pass_flags(r)
    r.set_defaults(fn=cmd_run)

    d = sub.add_parser("dump-ir", help="print the program at one pipeline stage")
    d.add_argument("file")
    d.add_argument("--stage", required=True, choices=STAGES)
    _add_pass_flags(d)
    d.set_defaults(fn=cmd_dump_ir)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InternalError as exc:
        print(f"einc: internal error in {exc.stage}: {exc}", file=sys.stderr)
        return 2
    except EinError as exc:
        print(f"einc: {exc.stage} error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything else is a compiler bug
        print(f"einc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
