import json
import os
import subprocess
import sys

import numpy as np
import pytest

from einc.cli import main
from einc.pipeline import SIZE_POINTS, STAGES
from einc.runtime.nrrd import load_nrrd, write_nrrd

from support import CORPUS_DIR


def _corpus(name):
    return os.path.join(CORPUS_DIR, f"{name}.ddr")


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_compile_prints_sizes(capsys):
    assert main(["compile", _corpus("helicity")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in out] == [p for p, _ in SIZE_POINTS]


def test_stats_json(tmp_path):
    stats = tmp_path / "s.json"
    assert main(["compile", _corpus("edge"), "--stats", str(stats)]) == 0
    rep = json.loads(stats.read_text())
    assert rep["ok"] is True and rep["error"] is None
    assert [s["point"] for s in rep["sizes"]] == [p for p, _ in SIZE_POINTS]
    assert rep["config"]["enable_split"] is True


def test_budget_failure_exits_1_with_partial_stats(tmp_path, capsys):
    stats = tmp_path / "s.json"
    assert main(["compile", _corpus("stress"), "--no-split", "--stats", str(stats)]) == 1
    assert "BudgetExceeded" in stats.read_text() or "budget" in stats.read_text().lower()
    assert "error" in capsys.readouterr().err


def test_syntax_error_exits_1(tmp_path, capsys):
    src = _write(tmp_path, "bad.ddr", "tensor[3] x = ;\n")
    assert main(["compile", src]) == 1
    err = capsys.readouterr().err
    assert "1:15" in err or "line 1" in err


def test_missing_file_exits_1():
    assert main(["compile", "/nonexistent/prog.ddr"]) == 1


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["dump-ir", _corpus("dot"), "--stage", "bogus"])
    assert exc.value.code == 1


def test_emit_c(tmp_path):
    out = tmp_path / "dot.c"
    assert main(["compile", _corpus("dot"), "--emit-c", str(out)]) == 0
    assert "void dot_d(" in out.read_text()


def test_trace_rewrites(capsys):
    assert main(["compile", _corpus("edge"), "--trace-rewrites"]) == 0
    err = capsys.readouterr().err
    assert "deriv-conv" in err and "=>" in err


@pytest.mark.parametrize("stage", STAGES)
def test_dump_every_stage_is_deterministic(stage, capsys):
    assert main(["dump-ir", _corpus("helicity"), "--stage", stage]) == 0
    first = capsys.readouterr().out
    assert main(["dump-ir", _corpus("helicity"), "--stage", stage]) == 0
    assert capsys.readouterr().out == first and first


def test_dump_high_shows_sum(capsys):
    main(["dump-ir", _corpus("dot"), "--stage", "high"])
    assert "(sum (" in capsys.readouterr().out


def test_dump_high_norm_has_no_partials(capsys):
    main(["dump-ir", _corpus("edge"), "--stage", "high-norm"])
    out = capsys.readouterr().out
    assert "(partial" not in out and "(F " not in out


def test_run_csv(tmp_path):
    src = _write(tmp_path, "t.ddr", "input image(1)[] img;\nfield#0(1)[] F = img ⊛ tent;\n"
                                    "output real o = F(pos) over grid(1.5, 2.5, 2);\n")
    img = tmp_path / "img.nrrd"
    write_nrrd(str(img), np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 1)
    out = tmp_path / "o.csv"
    assert main(["run", src, "--input", f"img={img}", "--output", str(out), "--format", "csv"]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "p0,o"
    assert [float(r.split(",")[1]) for r in rows[1:]] == [2.5, 3.5]


def test_run_nrrd_grid_geometry(tmp_path):
    img = tmp_path / "img.nrrd"
    write_nrrd(str(img), np.arange(7.0), 1)
    src = _write(tmp_path, "t.ddr", "input image(1)[] img;\nfield#1(1)[] F = img ⊛ ctmr;\n"
                                    "output real o = F(pos) over grid(2, 4, 5);\n")
    out = tmp_path / "o.nrrd"
    assert main(["run", src, "--input", f"img={img}", "--output", str(out)]) == 0
    res = load_nrrd(str(out))
    np.testing.assert_allclose(res.data.reshape(-1), np.linspace(2, 4, 5), atol=1e-12)
    # spacing 0.5 from 2.0: world-to-index is x -> 2x - 4
    np.testing.assert_allclose(res.A, [[2.0]])
    np.testing.assert_allclose(res.b, [-4.0])


def test_run_out_of_domain_reports_index(tmp_path, capsys):
    img = tmp_path / "img.nrrd"
    write_nrrd(str(img), np.arange(4.0), 1)
    src = _write(tmp_path, "t.ddr", "input image(1)[] img;\nfield#0(1)[] F = img ⊛ tent;\n"
                                    "output real o = F(pos) over grid(0, 6, 4);\n")
    assert main(["run", src, "--input", f"img={img}", "--output", str(tmp_path / "o.csv"), "--format", "csv"]) == 1
    assert "position 2" in capsys.readouterr().err


def test_run_missing_input_exits_1(tmp_path):
    assert main(["run", _corpus("edge"), "--output", str(tmp_path / "o.nrrd")]) == 1


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "einc.cli", "compile", _corpus("dot")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "post-vn-low" in res.stdout
