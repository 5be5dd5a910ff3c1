"""The compiler driver: source text to scalar program, with size reports."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

from .errors import EinError, InternalError, WellFormedError
from .frontend import load_source
from .high import fuse, normalize, reduce_indices
from .ir import Assign, EinApp, SsaProgram, check_program
from .lowering import lower_high_to_mid, lower_mid_to_low
from .lowir import ScalarProgram, value_number_low
from .printer import dump_program
from .sizemgmt import PassConfig, measure_ir_size, size_manage
from .translate import translate_program

# measurement points, in pipeline order
SIZE_POINTS = (
    ("post-translate", "high"),
    ("post-normalize", "high"),
    ("post-lower-mid", "mid"),
    ("post-size-mgmt", "mid"),
    ("post-lower-low", "low"),
    ("post-vn-low", "low"),
)

STAGES = ("simple", "high", "high-norm", "mid", "mid-opt", "low")


@dataclass
class PipelineReport:
    source: str = ""
    ok: bool = False
    config: dict = field(default_factory=dict)
    sizes: list = field(default_factory=list)  # [{"point", "ir", "nodes"}]
    timings_ms: dict = field(default_factory=dict)
    error: dict | None = None

    def size(self, point: str) -> int | None:
        for s in self.sizes:
            if s["point"] == point:
                return s["nodes"]
        return None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


@dataclass
class Compiled:
    report: PipelineReport
    simple: object = None
    high: SsaProgram | None = None
    high_norm: SsaProgram | None = None
    mid: SsaProgram | None = None
    mid_opt: SsaProgram | None = None
    low_raw: ScalarProgram | None = None
    low: ScalarProgram | None = None

    def dump(self, stage: str) -> str:
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r} (expected one of {', '.join(STAGES)})")
        if stage == "simple":
            return self.simple.dump()
        if stage == "low":
            return self.low.dump()
        return dump_program(getattr(self, stage.replace("-", "_")))


def _verify(prog: SsaProgram, stage: str) -> None:
    try:
        check_program(prog)
    except WellFormedError as exc:
        raise InternalError(f"{stage} produced an ill-formed program: {exc}") from exc


def normalize_program(prog: SsaProgram, trace=None) -> SsaProgram:
    out = []
    for a in prog.assigns:
        if isinstance(a.rhs, EinApp):
            a = Assign(a.lhs, EinApp(reduce_indices(normalize(a.rhs.op, trace), trace), a.rhs.args))
        out.append(a)
    return prog.replace(out)


def compile_source(src: str, config: PassConfig = PassConfig(), trace=None, source_name: str = "<string>",
                   until: str | None = None) -> Compiled:
    """Run the whole pipeline.  Diagnostics propagate as :class:`EinError`
    subclasses with ``stage`` set; the partial report is attached as
    ``exc.report``.  ``until`` stops after the named stage."""
    report = PipelineReport(source=source_name, config=asdict(config))
    res = Compiled(report)
    clock = time.perf_counter

    def step(name, fn, *args):
        t = clock()
        try:
            return fn(*args)
        except EinError as exc:
            exc.stage = name
            report.error = {"stage": name, "type": type(exc).__name__, "message": str(exc)}
            exc.report = report
            raise
        finally:
            report.timings_ms[name] = round(report.timings_ms.get(name, 0.0) + (clock() - t) * 1000, 3)

    def measure(point, prog):
        ir = dict(SIZE_POINTS)[point]
        report.sizes.append({"point": point, "ir": ir, "nodes": measure_ir_size(prog)})

    res.simple = step("frontend", load_source, src)
    if until == "simple":
        return _done(res)
    res.high = step("translate", translate_program, res.simple)
    measure("post-translate", res.high)
    if until == "high":
        return _done(res)
    fused = step("fuse", fuse, res.high)
    res.high_norm = step("normalize", normalize_program, fused, trace)
    step("normalize", _verify, res.high_norm, "normalize")
    measure("post-normalize", res.high_norm)
    if until == "high-norm":
        return _done(res)
    res.mid = step("lower-mid", lower_high_to_mid, res.high_norm, config.enable_split, config.enable_slice,
                   config.enable_vn)
    step("lower-mid", _verify, res.mid, "lower-mid")
    measure("post-lower-mid", res.mid)
    if until == "mid":
        return _done(res)
    res.mid_opt = step("size-mgmt", size_manage, res.mid, config)
    step("size-mgmt", _verify, res.mid_opt, "size-mgmt")
    measure("post-size-mgmt", res.mid_opt)
    if until == "mid-opt":
        return _done(res)
    res.low_raw = step("lower-low", lower_mid_to_low, res.mid_opt, config.node_budget)
    measure("post-lower-low", res.low_raw)
    res.low = step("vn-low", value_number_low, res.low_raw) if config.enable_vn else res.low_raw
    measure("post-vn-low", res.low)
    return _done(res)


def _done(res: Compiled) -> Compiled:
    res.report.ok = True
    return res
