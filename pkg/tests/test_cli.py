import json
import subprocess
import sys

import pytest

from qeclab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_deterministic(capsys):
    a = run(capsys, "simulate", "--config", "robotarm_stabilized", "--seed", "7", "--horizon", "20", "--trials", "4", "--p", "0.01")
    b = run(capsys, "simulate", "--config", "robotarm_stabilized", "--seed", "7", "--horizon", "20", "--trials", "4", "--p", "0.01")
    c = run(capsys, "simulate", "--config", "robotarm_stabilized", "--seed", "8", "--horizon", "20", "--trials", "4", "--p", "0.01")
    assert a[0] == 0 and a[1] == b[1]
    assert a[1] != c[1]
    assert a[1].splitlines()[0] == "t,mse_mean,state_norm_mean,alive"


def test_out_directory(capsys, tmp_path):
    code, out, _ = run(capsys, "pstar", "--config", "robotarm_stabilized", "--out", str(tmp_path))
    assert code == 0 and "wrote" in out
    text = (tmp_path / "robotarm_stabilized_pstar.csv").read_text()
    header, row = text.splitlines()
    assert header.startswith("plant,rho_closed")
    assert row.split(",")[-2:] == ["exact", "-1"]


def test_pstar_on_unstable_literal_arm(capsys):
    code, _, err = run(capsys, "pstar", "--config", "robotarm")
    assert code == 1 and "UnstableClosedLoop" in err


def test_missing_config(capsys):
    assert run(capsys, "simulate")[0] == 2
    code, _, err = run(capsys, "simulate", "--config", "nope.json")
    assert code == 2 and "not found" in err


def test_invalid_config(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"plant": {"A": [[1]], "B": [1], "K": [1]}, "w_b": 99}))
    code, _, err = run(capsys, "pstar", "--config", str(p))
    assert code == 2 and "w_b <= 24" in err


def test_bad_seed(capsys):
    assert run(capsys, "pstar", "--config", "robotarm_stabilized", "--seed", str(2**64))[0] == 2


def test_quantize_test(capsys):
    code, out, _ = run(capsys, "quantize-test", "--w-max", "6", "--points", "20")
    assert code == 0
    rows = out.splitlines()[1:]
    assert len(rows) == 5 and all(r.endswith("true") for r in rows)


def test_privacy(capsys):
    code, out, _ = run(capsys, "privacy", "--config", "robotarm", "--zeta", "0.001", "--draws", "50")
    assert code == 0
    header, row = out.splitlines()
    assert header == "zeta,alpha,xbar_agg,w,delta,measured_max_gap,feasible"
    vals = row.split(",")
    assert float(vals[5]) <= float(vals[4]) and vals[6] == "true"


def test_attack_and_bench(capsys):
    code, out, _ = run(capsys, "attack", "--config", "robotarm_stabilized")
    assert code == 0 and out.splitlines()[0] == "noise,none,qec"
    code, out, _ = run(capsys, "bench", "--config", "robotarm_stabilized", "--steps", "5")
    assert code == 0 and out.startswith("role,qec,")


def test_keygen_sim(capsys):
    code, out, _ = run(capsys, "keygen-sim", "--config", "robotarm", "--pairs", "3", "--dump")
    assert code == 0 and out.splitlines()[0].startswith("t=0 se=")
    code, out, _ = run(capsys, "keygen-sim", "--config", "robotarm", "--pairs", "300")
    assert code == 0 and float(out.splitlines()[1].split(",")[2]) == 0.0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qeclab", "pstar", "--config", "robotarm_stabilized"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("plant,")
