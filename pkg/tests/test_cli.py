import json
import subprocess
import sys

import pytest

from planarqec.circuits import Circuit
from planarqec.cli import main
from planarqec.codes import CssCode
from planarqec.harness import read_results


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    code = d / "toric3.json"
    circ = d / "toric3_circuit.json"
    assert main(["generate-code", "--toric", "3", "--out", str(code)]) == 0
    assert main(["build-circuit", "--code", str(code), "--kind", "coloration", "--out", str(circ)]) == 0
    return d, code, circ


def test_generate_code(tmp_path, capsys):
    out = tmp_path / "hgp.json"
    assert main(["generate-code", "--s", "2", "--girth-min", "4", "--seed", "1", "--out", str(out)]) == 0
    code = CssCode.load(out)
    assert (code.n, code.k) == (100, 4)
    assert "n=100 k=4" in capsys.readouterr().out
    assert main(["generate-code", "--toric", "3"]) == 0
    assert json.loads(capsys.readouterr().out)


def test_build_circuit_kinds(files, tmp_path):
    _, code, circ = files
    assert Circuit.load(circ).depth == 10
    out = tmp_path / "card.json"
    assert main(["build-circuit", "--code", str(code), "--out", str(out)]) == 0
    assert Circuit.load(out).depth == 6
    assert main(["build-circuit", "--code", str(code), "--kind", "coloration", "--basis", "X",
                 "--out", str(tmp_path / "x.json")]) == 0
    assert Circuit.load(tmp_path / "x.json").n_zanc == 0


@pytest.mark.parametrize("strategy", ["two_factor", "directional", "greedy"])
def test_layout(files, tmp_path, strategy):
    _, code, circ = files
    out = tmp_path / "layout.json"
    assert main(["layout", "--code", str(code), "--circuit", str(circ), "--strategy", strategy,
                 "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["num_layers"] == len(rep["layers"]) and all(rep["planar"])
    assert len(rep["positions"]) == 36


def test_simulate_zero_noise(files, tmp_path, capsys):
    _, code, circ = files
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--code", str(code), "--circuit", str(circ), "--p", "0", "--rounds", "3",
                 "--trials", "20", "--out", str(out)]) == 0
    header, rows = read_results(out)
    assert header["command"] == "simulate" and len(rows) == 20
    assert all(r["failed"] == "False" and r["failure_round_bucket"] == "" for r in rows)
    assert "failures 0/20" in capsys.readouterr().out


def test_simulate_noisy_marks_failure_bucket(files, tmp_path):
    _, code, circ = files
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--code", str(code), "--circuit", str(circ), "--p", "0.02", "--rounds", "2",
                 "--trials", "100", "--seed", "1", "--out", str(out)]) == 0
    _, rows = read_results(out)
    failed = [r for r in rows if r["failed"] == "True"]
    assert failed and all(r["failure_round_bucket"] == 2 for r in failed)
    assert [r["trial"] for r in rows] == list(range(100))


def test_rounds_sweep(files, tmp_path, capsys):
    _, code, circ = files
    out = tmp_path / "sweep.csv"
    assert main(["rounds-sweep", "--code", str(code), "--circuit", str(circ), "--p", "0.003",
                 "--rounds-list", "1-4", "--tail-from", "2", "--trials", "200", "--out", str(out)]) == 0
    _, rows = read_results(out)
    assert [r["rounds"] for r in rows] == [1, 2, 3, 4]
    assert "tail slope" in capsys.readouterr().out


def test_run_and_fit(tmp_path, capsys):
    outs = []
    for d in (3, 5):
        out = tmp_path / f"t{d}.csv"
        assert main(["run", "--toric", str(d), "--circuit", "coloration", "--p", "0.002,0.004",
                     "--rounds", "2", "--trials", "50", "--out", str(out)]) == 0
        header, rows = read_results(out)
        assert header["toric_d"] == d and [r["p"] for r in rows] == [0.002, 0.004]
        outs.append(str(out))
    # two p values per code cannot identify the model: runtime error, exit 2
    assert main(["fit", *outs]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["run", "--toric", "3", "--circuit", "coloration", "--p", "0", "--trials", "5",
                 "--rounds", "1"]) == 0
    assert capsys.readouterr().out.startswith("# config: ")


def test_fit_on_synthetic_csv(tmp_path):
    from planarqec.harness import format_results, threshold_model

    rows = []
    for k in (16, 36, 64):
        for p in (5e-4, 1e-3, 1.5e-3, 2e-3):
            rows.append({"p": p, "k": k, "pl_round": threshold_model(p, k, 0.64, 1.3, 0.21, 2.8e-3)})
    src = tmp_path / "syn.csv"
    src.write_text(format_results({}, rows, ("p", "k", "pl_round")))
    out = tmp_path / "fit.json"
    assert main(["fit", str(src), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["p_t"] == pytest.approx(2.8e-3, rel=1e-3)


def test_table(capsys):
    assert main(["table"]) == 0
    text = capsys.readouterr().out
    for number in ("387200", "2880000", "13354112", "78400", "313600", "906304", "4.94", "9.18", "14.73"):
        assert number in text
    assert main(["table", "--format", "csv", "--targets", "1e-9"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("target,") and lines[1].endswith(",4.94")


def test_config_file_overrides_defaults(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"format": "csv", "table": {"targets": [1e-12]}}))
    for argv in (["--config", str(cfg), "table"], ["table", "--config", str(cfg)]):
        assert main(argv) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2 and ",9.18" in lines[1]
    # explicit flags still win
    assert main(["table", "--config", str(cfg), "--format", "markdown"]) == 0
    assert capsys.readouterr().out.startswith("| target")


def test_usage_errors_exit_one(tmp_path, capsys):
    assert main(["table", "--no-such-flag"]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["generate-code"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["table", "--config", str(bad)]) == 1
    assert main(["table", "--config", str(tmp_path / "missing.json")]) == 1
    capsys.readouterr()


def test_runtime_errors_exit_two(tmp_path, capsys):
    assert main(["build-circuit", "--code", str(tmp_path / "missing.json")]) == 2
    assert main(["table", "--p", "0.5"]) == 2
    assert main(["run", "--toric", "3", "--p", "1.0", "--trials", "1"]) == 2
    assert "error" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert main(["simulate", "--help"]) == 0
    assert "usage" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "planarqec", "table", "--targets", "1e-9"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "387200" in res.stdout
