import csv
import json

import pytest

from voskit.builtins import builtin_model, builtin_names
from voskit.cli import main
from voskit.modelfile import parse_model

BAD_QP = """
[species]
u : bulk diff=1
v : surface diff=1

[kinetics]
G[u] = -1
"""

BAD_GROWTH = """
[species]
u : bulk diff=1
v : surface diff=1

[kinetics]
G[u] = u^2
"""


@pytest.mark.parametrize("name", builtin_names())
def test_dump_builtin_roundtrips(name, capsys):
    assert main(["--dump-builtin", name]) == 0
    text = capsys.readouterr().out
    m = parse_model(text, name=name)
    ref = builtin_model(name)
    assert m.kinetics_h == ref.kinetics_h
    assert m.kinetics_f == ref.kinetics_f
    assert m.kinetics_g == ref.kinetics_g


def test_check_builtin_brusselator_ok(capsys):
    code = main(["check", "--builtin", "brusselator", "--samples", "800"])
    doc = json.loads(capsys.readouterr().out)
    assert code == 0
    assert doc["ok"] is True
    assert doc["pairing"]["found"] is True
    assert all(v["status"] == "no-counterexample" for v in doc["quasi_positivity"])


def test_check_quasi_positivity_violation_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.vsm"
    path.write_text(BAD_QP)
    code = main(["check", "--model", str(path), "--samples", "500"])
    doc = json.loads(capsys.readouterr().out)
    assert code == 2
    bad = [v for v in doc["quasi_positivity"] if v["status"] == "counterexample"]
    assert bad and bad[0]["witness"]["zeta"]["u"] == 0.0


def test_check_growth_violation_exits_2(tmp_path, capsys):
    path = tmp_path / "growth.vsm"
    path.write_text(BAD_GROWTH)
    code = main(["check", "--model", str(path), "--samples", "500"])
    doc = json.loads(capsys.readouterr().out)
    assert code == 2
    assert doc["pairing"]["found"] is False
    assert doc["pairing"]["failures"]
    w = doc["pairing"]["failures"][0]["witness"]
    assert w["lhs"] > w["rhs"]


def test_check_missing_file_exits_1(capsys):
    assert main(["check", "--model", "/no/such/file.vsm"]) == 1


def test_check_parse_error_exits_1(tmp_path, capsys):
    path = tmp_path / "syntax.vsm"
    path.write_text("[species]\nu : bulk diff=1\n\n[kinetics]\nG[u] = 1 +\n")
    assert main(["check", "--model", str(path)]) == 1
    assert "error" in capsys.readouterr().err


def test_check_eval_error_exits_1(tmp_path, capsys):
    # 1/v blows up on the zero face of the sample box
    path = tmp_path / "diverge.vsm"
    path.write_text(
        "[species]\nu : bulk diff=1\nv : surface diff=1\n\n[kinetics]\nF[v] = 1/v\n"
    )
    assert main(["check", "--model", str(path), "--samples", "200"]) == 1
    assert "division by zero" in capsys.readouterr().err


def test_check_out_file_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        code = main(
            ["check", "--builtin", "min-system", "--samples", "600",
             "--seed", "5", "--out", str(out)]
        )
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(
        [
            "simulate", "--builtin", "ratz-roger",
            "--nr", "8", "--ntheta", "16",
            "-T", "0.2", "--dt", "1e-3", "--dt-out", "0.1",
            "--snapshots", "0.1",
            "--out", str(out),
        ]
    )
    assert code == 0
    printed = capsys.readouterr().out
    assert "final sup u" in printed

    rows = [
        r
        for r in csv.reader((out / "diagnostics.csv").open())
        if r and not r[0].startswith("#")
    ]
    assert rows[0][0] == "time"
    assert "M_r" in rows[0]
    assert len(rows) == 1 + 3

    summary = json.loads((out / "summary.json").read_text())
    assert summary["model"] == "ratz-roger"
    assert summary["functional_drift"]["M_r"] <= 1e-8
    assert set(summary["running_min"]) == {"u", "v1", "v2"}

    snaps = sorted(p.name for p in out.glob("snapshot_*.csv"))
    assert snaps == [
        "snapshot_u_t0p1.csv",
        "snapshot_v1_t0p1.csv",
        "snapshot_v2_t0p1.csv",
    ]


def test_simulate_lower_bound_flag(tmp_path):
    out = tmp_path / "run"
    code = main(
        [
            "simulate", "--builtin", "brusselator",
            "--nr", "8", "--ntheta", "16",
            "-T", "2", "--dt", "1e-3",
            "--check-lower-bound", "--out", str(out),
        ]
    )
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["lower_bound_violation"] is False


def test_simulate_stiffness_failure_exits_3(capsys):
    code = main(
        [
            "simulate", "--builtin", "brusselator",
            "--nr", "8", "--ntheta", "16",
            "-T", "20", "--dt", "10", "--dt-min", "9",
        ]
    )
    assert code == 3
    assert "stiffness" in capsys.readouterr().err


def test_simulate_rejects_invalid_model(tmp_path, capsys):
    path = tmp_path / "bad.vsm"
    path.write_text("[species]\nu : bulk diff=-1\n")
    assert main(["simulate", "--model", str(path), "-T", "1"]) == 1


def test_usage_without_command(capsys):
    assert main([]) == 1
