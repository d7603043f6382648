import csv
import io
import json
import math

import numpy as np
import pytest

from l2torsion import cli
from l2torsion import hilbert_complex as hc
from l2torsion import morse_smale as msm
from l2torsion import vn_core as vn
from l2torsion.vn_core import EquivariantOperator, GroupSpec


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- fk-det

def test_fk_det_identity(tmp_path, capsys):
    op = write(tmp_path, "id.json", vn.operator_to_dict(EquivariantOperator.identity(GroupSpec.trivial(), 1)))
    csv_path = tmp_path / "sd.csv"
    code, out, _ = run(capsys, "fk-det", "--input", op, "--output", str(csv_path))
    assert code == 0
    assert out.strip() == "det=1.0 alpha=inf+ class=true"
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["lambda", "F"]


def test_fk_det_z_minus_two(tmp_path, capsys):
    op = write(tmp_path, "op.json", vn.operator_to_dict(EquivariantOperator.laurent({1: 1, 0: -2})))
    code, out, _ = run(capsys, "fk-det", "--input", op, "--format", "json")
    data = json.loads(out)
    assert code == 0 and abs(data["det"] - 2.0) < 1e-8
    assert data["tolerance"] == vn.QUAD_RTOL


def test_fk_det_cyclic_shift(tmp_path, capsys):
    op = EquivariantOperator.laurent({1: 1, 0: -1}, group=GroupSpec.cyclic(4))
    path = write(tmp_path, "op.json", vn.operator_to_dict(op))
    code, out, _ = run(capsys, "fk-det", "--input", path)
    det = float(out.split()[0].split("=")[1])
    assert code == 0 and abs(det - 4 ** 0.25) < 1e-12


def test_fk_det_csv_to_stdout_with_grid(tmp_path, capsys):
    op = write(tmp_path, "op.json", vn.operator_to_dict(EquivariantOperator.laurent({1: 1, 0: -1})))
    code, out, _ = run(capsys, "fk-det", "--input", op, "--format", "csv", "--grid", "4")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "lambda,F"
    assert len(lines) == 1 + 1 + 5 * 4 + 1


# -- torsion

def test_torsion_identity_complex(tmp_path, capsys):
    G = GroupSpec.trivial()
    C = hc.HilbertComplex(G, 1, [2, 2], [EquivariantOperator.identity(G, 2)])
    path = write(tmp_path, "c.json", hc.complex_to_dict(C))
    code, out, _ = run(capsys, "torsion", "--input", path)
    data = json.loads(out)
    assert code == 0
    assert data["log_torsion"] == pytest.approx(0.0, abs=1e-14)
    assert data["betti"] == [0.0, 0.0]
    assert "tolerance" in data


def test_torsion_zero_differential(tmp_path, capsys):
    G = GroupSpec.cyclic(2)
    C = hc.HilbertComplex(G, 1, [1, 3], [EquivariantOperator.zero(G, 3, 1)])
    path = write(tmp_path, "c.json", hc.complex_to_dict(C))
    code, out, _ = run(capsys, "torsion", "--input", path)
    data = json.loads(out)
    assert data["torsion"] == 1.0 and data["betti"] == [1.0, 3.0]


def test_torsion_circle_system(tmp_path, capsys):
    path = write(tmp_path, "s.json", msm.system_to_dict(msm.circle_system(2.0)))
    code, out, _ = run(capsys, "torsion", "--input", path)
    data = json.loads(out)
    # cochain convention carries +log 2; the Morse-Smale sign convention flips it
    assert data["log_torsion"] == pytest.approx(math.log(2.0), abs=1e-8)
    assert data["logT_ms"] == pytest.approx(-math.log(2.0), abs=1e-8)


def test_torsion_csv(tmp_path, capsys):
    path = write(tmp_path, "s.json", msm.system_to_dict(msm.circle_system(2.0)))
    code, out, _ = run(capsys, "torsion", "--input", path, "--format", "csv")
    assert code == 0 and out.startswith("degree,betti")


def test_torsion_invalid_complex(tmp_path, capsys):
    G = GroupSpec.trivial()
    one = EquivariantOperator.from_matrix(G, [[1.0]], 1, 1)
    C = hc.HilbertComplex(G, 1, [1, 1, 1], [one, one])
    path = write(tmp_path, "c.json", hc.complex_to_dict(C))
    code, _, err = run(capsys, "torsion", "--input", path)
    assert code == 2 and "!= 0" in err


# -- verify

def test_verify_interval(capsys):
    code, out, err = run(capsys, "verify", "--example", "interval")
    assert code == 0
    assert "PASS boundary_anomaly" in err
    rows = list(csv.DictReader(io.StringIO(out)))
    assert all(float(r["residual"]) < 1e-6 for r in rows)


def test_verify_combinatorial_suite(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "combinatorial", "--seed", "7")
    assert code == 0
    again = run(capsys, "verify", "--suite", "combinatorial", "--seed", "7")[1]
    assert out == again


def test_verify_failure_exit_code(capsys):
    code, _, err = run(capsys, "verify", "--example", "interval", "--tolerance", "1e-17")
    assert code == 1 and "FAIL" in err


def test_verify_malformed_json(tmp_path, capsys):
    path = write(tmp_path, "bad.json", '{"examples": ["interval"],\n  oops}')
    code, _, err = run(capsys, "verify", "--input", path)
    assert code == 2 and "line 2" in err


def test_verify_unknown_key(tmp_path, capsys):
    path = write(tmp_path, "cfg.json", {"examples": ["interval"], "mystery": 1})
    code, _, err = run(capsys, "verify", "--input", path)
    assert code == 2 and "mystery" in err


def test_verify_json_output(tmp_path, capsys):
    out_path = tmp_path / "checks.json"
    code, _, _ = run(capsys, "verify", "--example", "interval", "--format", "json",
                     "--output", str(out_path))
    data = json.loads(out_path.read_text())
    assert code == 0 and all(d["pass"] for d in data)


# -- witten

def test_witten_rows_and_summary(capsys):
    code, out, err = run(capsys, "witten", "--grid", "800",
                         "--t", "0,50,70,100,140,200,300,500")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[0]["logT_sm"]) == 0.0
    assert all(float(r["residual"]) < 1e-10 for r in rows)
    summary = json.loads(err)
    assert summary["small_rank"][1:] == [1] * 7
    assert summary["free_term"] is not None


def test_witten_guard_band_violation(capsys):
    code, _, err = run(capsys, "witten", "--grid", "200", "--t", "5",
                       "--guard-band", "1e-30,1e30")
    assert code == 3 and "guard band" in err


def test_witten_bad_arguments(capsys):
    assert run(capsys, "witten", "--t", "a,b")[0] == 2
    assert run(capsys, "witten", "--guard-band", "2,3")[0] == 2
    assert run(capsys, "witten", "--grid", "2")[0] == 2


# -- general

def test_missing_input(capsys):
    code, _, err = run(capsys, "fk-det")
    assert code == 2 and "--input" in err


def test_unreadable_file(capsys):
    assert run(capsys, "torsion", "--input", "/nonexistent/x.json")[0] == 2


def test_bad_flag(capsys):
    assert run(capsys, "verify", "--frobnicate")[0] == 2


def test_negative_tolerance(capsys):
    assert run(capsys, "verify", "--example", "interval", "--tolerance", "-1")[0] == 2
