import io
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from scglue import formats as F
from scglue import operators as Op
from scglue.cli import main
from scglue.sampling import random_orbit_element, random_pair
from scglue.verify import orbit_length

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_verify_nodal_defaults():
    code, text, _ = run("verify", "--suite", "nodal")
    assert code == 0
    line = next(l for l in text.splitlines() if l.startswith("oplus(f(w)) = w"))
    assert line.endswith("PASS")
    err = next(tok for tok in line.split() if tok.startswith("max_err="))
    assert float(err.split("=")[1]) <= 1e-12


def test_verify_rejects_odd_nt():
    code, _, err = run("verify", "--suite", "all", "--Nt", "7")
    assert code == 2
    assert "--Nt" in err


def test_verify_operators_reports_cz_axiom():
    code, text, _ = run("verify", "--suite", "operators")
    assert code == 0
    assert "μ_CZ(e^{πit})=1 PASS" in text


def test_verify_csv_format():
    code, text, _ = run("verify", "--suite", "nodal", "--pairs", "2", "--format", "csv")
    assert code == 0
    rows = text.splitlines()
    assert rows[0] == "check,max_err,tol,status"
    assert all(r.endswith(",PASS") for r in rows[1:])


def test_spectrum_of_zero_loop():
    code, text, _ = run("spectrum", "--loop", str(SAMPLES / "zero.loop"), "--K", "32")
    assert code == 0
    rows = [r.split(",") for r in text.splitlines()[1:]]
    assert text.splitlines()[0] == "param,eigenvalue,multiplicity"
    values = {round(float(v) / (2 * math.pi)): int(m) for _, v, m in rows}
    assert values[0] == 2 and values[1] == 2 and values[-1] == 2
    assert max(abs(float(v)) for _, v, _ in rows) <= 2 * math.pi * 14 + 1e-9


def test_spectrum_report_and_weights(tmp_path):
    p = tmp_path / "rot.loop"
    p.write_text(F.dumps(F.write_loop, Op.LoopOperator.constant(2 * math.pi * 0.3 * np.eye(2))))
    code, text, _ = run("spectrum", "--loop", str(p), "--format", "report", "--delta", "1.0,2.0")
    assert code == 0
    assert "delta 1.0 admissible" in text
    assert "delta 2.0 not admissible" in text


def test_spectrum_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run("spectrum", "--loop", str(SAMPLES / "zero.loop"), "--scales", "0,0.5,1.3",
                   "--out", str(p))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_index_sweep_crosses_2pi():
    code, text, _ = run("index", "--n", "1", "--delta-from", "0.5", "--delta-to", "6.5", "--steps", "13")
    assert code == 0
    rows = [r.split(",") for r in text.splitlines()[1:]]
    assert len(rows) == 13
    for d, k, c, i in rows:
        assert int(i) == (2 if float(d) < 2 * math.pi else 6)
        assert int(k) - int(c) == int(i)


def test_index_single_delta_is_reproducible():
    a = run("index", "--n", "3", "--delta", "3.141592653589793")
    b = run("index", "--n", "3", "--delta", "3.141592653589793")
    assert a == b
    assert a[1] == "delta,kernel,cokernel,index\n3.141592653589793,6,0,6\n"


@pytest.mark.parametrize("argv", [
    ("index", "--n", "1", "--delta", "0"),
    ("index", "--n", "1"),
    ("index", "--n", "0", "--delta", "1"),
    ("index", "--n", "1", "--delta", "a,b"),
])
def test_index_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_cz_of_half_turn():
    code, text, _ = run("cz", "--path", str(SAMPLES / "rot_half.scpath"))
    assert (code, text) == (0, "1\n")


def test_cz_maslov_loop(tmp_path):
    p = tmp_path / "loop.scpath"
    p.write_text(F.dumps(F.write_path, Op.rotation_loop(2, 101)))
    assert run("cz", "--path", str(p), "--maslov") == (0, "1\n", "")


def test_cz_degenerate_endpoint_is_usage_error(tmp_path):
    p = tmp_path / "id.scpath"
    p.write_text(F.dumps(F.write_path, Op.rotation_loop(1, 101)))
    code, _, err = run("cz", "--path", str(p))
    assert code == 2
    assert "eigenvalue 1" in err


def test_parse_error_names_line(tmp_path):
    p = tmp_path / "bad.loop"
    p.write_text("SCLOOP n=1 Nt=2\n0 0\n0 zz\n")
    code, _, err = run("spectrum", "--loop", str(p))
    assert code == 2
    assert err.startswith("scglue: parse error: line 3:")


def test_missing_file_is_usage_error(tmp_path):
    assert run("cz", "--path", str(tmp_path / "nope.scpath"))[0] == 2


def test_glue_unglue_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    ux, uy = random_pair(rng, nt=16, smax=30.0)
    x, y = tmp_path / "x.fld", tmp_path / "y.fld"
    x.write_text(F.dumps(F.write_field, ux))
    y.write_text(F.dumps(F.write_field, uy))
    glued = tmp_path / "g.fld"
    assert run("glue", "--x", str(x), "--y", str(y), "--R", "12", "--theta", "0.25",
               "--out", str(glued))[0] == 0
    code, text, _ = run("unglue", "--in", str(glued))
    assert code == 0
    bx, by = F.read_fields(text)
    assert np.max(np.abs(bx.values - ux.values)) <= 1e-9
    assert np.max(np.abs(by.c - uy.c)) <= 1e-9


def test_glue_rejects_misaligned_length(tmp_path):
    rng = np.random.default_rng(6)
    ux, uy = random_pair(rng, nt=16, smax=30.0)
    x, y = tmp_path / "x.fld", tmp_path / "y.fld"
    x.write_text(F.dumps(F.write_field, ux))
    y.write_text(F.dumps(F.write_field, uy))
    assert run("glue", "--x", str(x), "--y", str(y), "--R", "12.1")[0] == 2


def test_unglue_wants_two_fields(tmp_path):
    rng = np.random.default_rng(7)
    ux, _ = random_pair(rng, nt=8, smax=10.0)
    p = tmp_path / "one.fld"
    p.write_text(F.dumps(F.write_field, ux))
    assert run("unglue", "--in", str(p))[0] == 2


def test_orbit_avg_recovers_decorations(tmp_path):
    rng = np.random.default_rng(8)
    el = random_orbit_element(rng, 0.2, nt=16, length=orbit_length(0.2, 1.0), amplitude=0.0)
    p = tmp_path / "e.elem"
    p.write_text(F.dumps(F.write_element, el))
    code, text, _ = run("orbit-avg", "--elem", str(p), "--format", "csv")
    assert code == 0
    header, row = text.splitlines()
    assert header == "c_x,c_y,theta_x,theta_y,d"
    vals = [float(v) for v in row.split(",")]
    # a pure standard map glues to itself; its middle averages return its constants
    assert abs(vals[0] - el.q.cx) <= 1e-10
    assert abs(vals[1] - el.q.cy) <= 1e-10


def test_probe_empty_and_unknown():
    code, text, _ = run("probe", "--targets", "")
    assert code == 0
    assert text.startswith("SUMMARY ")
    assert run("probe", "--targets", "gamma1,bogus")[0] == 2


def test_probe_single_target():
    code, text, _ = run("probe", "--targets", "gamma1")
    assert code == 0
    assert '"gamma1"' in text


@pytest.mark.parametrize("flags", [
    ("--Ds", "0"), ("--Ds", "0.75"), ("--Smax", "10.1"), ("--R", "-1"),
    ("--theta", "1.0"), ("--seed", "-3"), ("--Nt", "2"),
])
def test_common_flag_validation(flags):
    assert run("cz", "--path", str(SAMPLES / "rot_half.scpath"), *flags)[0] == 2


def test_bad_subcommand_exits_2():
    assert run("frobnicate")[0] == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "scglue", "cz", "--path", str(SAMPLES / "rot_half.scpath")],
                         capture_output=True, text=True)
    assert (out.returncode, out.stdout) == (0, "1\n")
