import json
import subprocess
import sys

import pytest

from qmbc.cli import EXIT_INVALID, EXIT_OK, build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_capacity(capsys):
    code, out, err = run(capsys, "capacity", "--s", "2", "--eps", "0.2,0.1")
    assert code == EXIT_OK
    assert out.splitlines()[1] == "0.2,0.1,0.8,1.6"
    assert "0.800000" in err


def test_de_threshold(capsys):
    code, out, _ = run(capsys, "de-threshold", "--s", "2", "--dv", "3", "--dc", "6", "--labels",
                       "optimal", "--jmax", "1", "--direction", "1,0", "--tol", "1e-3")
    assert code == EXIT_OK
    thr = float(out.splitlines()[1].split(",")[4])
    assert abs(thr - 0.858) <= 0.002


def test_de_region(capsys, tmp_path):
    out_path = tmp_path / "r.csv"
    code, _, _ = run(capsys, "de-region", "--s", "2", "--resolution", "3", "--tol", "1e-2",
                     "--out", str(out_path))
    assert code == EXIT_OK
    assert len(out_path.read_text().splitlines()) == 4
    assert json.loads((tmp_path / "r.csv.json").read_text())["config"]["resolution"] == 3


@pytest.mark.parametrize("argv", [
    ["capacity", "--s", "2"],
    ["capacity", "--s", "2", "--eps", "0.7,0.7"],
    ["capacity", "--s", "2", "--eps", "a,b"],
    ["capacity", "--s", "2", "--eps", "0.1,0.1", "--bogus"],
    ["nope"],
    ["simulate", "--s", "2", "--n", "54", "--eps", "0.1,0.1", "--direction", "1,0", "--sweep", "0.1"],
    ["simulate", "--s", "2", "--n", "54", "--direction", "1,0"],
    ["simulate", "--s", "2", "--n", "50", "--eps", "0.1,0.1"],
    ["ml-snbre", "--s", "2", "--n", "20", "--eps", "0.1,0.1"],
    ["ml-snbre", "--s", "2", "--n", "20", "--k", "8", "--eps", "0.1"],
])
def test_invalid_input_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_INVALID
    assert err


def test_runtime_error_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "capacity", "--s", "2", "--eps", "0.1,0.1",
                       "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == 2 and "runtime error" in err


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# channel\ns = 2\neps = 0.2, 0.1\n")
    code, out, _ = run(capsys, "capacity", "--config", str(cfg))
    assert code == EXIT_OK and out.splitlines()[1].startswith("0.2,0.1,")
    code, out, _ = run(capsys, "capacity", "--config", str(cfg), "--eps", "0,0")
    assert out.splitlines()[1] == "0.0,0.0,1.0,2.0"
    cfg.write_text("colour = red\n")
    assert run(capsys, "capacity", "--s", "2", "--eps", "0,0", "--config", str(cfg))[0] == EXIT_INVALID
    cfg.write_text("s: 2\n")
    assert run(capsys, "capacity", "--eps", "0,0", "--config", str(cfg))[0] == EXIT_INVALID


def test_bool_config(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("as_full = maybe\n")
    argv = ["ml-snbre", "--s", "2", "--n", "20", "--k", "10", "--eps", "0.1,0.1", "--config", str(cfg)]
    assert run(capsys, *argv)[0] == EXIT_INVALID
    cfg.write_text("as-full = true\n")
    code, out, _ = run(capsys, *argv)
    assert code == EXIT_OK


def test_graph_commands(capsys, tmp_path):
    g = tmp_path / "g.qa"
    assert run(capsys, "graph-gen", "--s", "2", "--n", "24", "--out", str(g), "--seed", "4")[0] == 0
    code, out, _ = run(capsys, "graph-validate", str(g), "--dv", "3", "--dc", "6")
    assert code == 0 and out.splitlines()[1] == "24,12,4,72,3,3,6,6,1"
    assert run(capsys, "graph-validate", str(g), "--dc", "5")[0] == EXIT_INVALID
    g.write_text("garbage\n")
    code, _, err = run(capsys, "graph-validate", str(g))
    assert code == EXIT_INVALID and "line 1" in err


def test_label_optimize(capsys, tmp_path):
    g = tmp_path / "g.qa"
    run(capsys, "graph-gen", "--s", "2", "--n", "108", "--dc", "27", "--out", str(g))
    out_g = tmp_path / "opt.qa"
    code, out, err = run(capsys, "label-optimize", "--graph", str(g), "--runs", "100",
                         "--out-graph", str(out_g))
    assert code == 0
    assert out.splitlines()[0] == "check_index,edge_position,old_label,new_label,step"
    assert out_g.exists() and "edges relabeled" in err


def test_ml_commands(capsys):
    code, out, _ = run(capsys, "ml-snbre", "--s", "2", "--n", "12", "--k", "8",
                       "--direction", "1,0.1", "--sweep", "0.1,0.2")
    assert code == 0 and len(out.splitlines()) == 3
    assert out.splitlines()[1].split(",")[3] == "exact"
    code, out, _ = run(capsys, "ml-ldpc-bound", "--s", "2", "--n", "24", "--dc", "6", "--eps", "0.1,0")
    assert code == 0 and out.splitlines()[1].split(",")[3] == "bound"


def test_simulate_binary(capsys):
    code, out, _ = run(capsys, "simulate", "--s", "2", "--n", "54", "--labels", "binary",
                       "--eps", "0.05,0.0", "--trials", "20")
    assert code == 0 and out.splitlines()[0].startswith("eps_1,eps_2,trials")


def test_help_lists_defaults():
    sub = build_parser()._subparsers._group_actions[0].choices
    for name, p in sub.items():
        text = p.format_help()
        assert "--seed" in text and "--threads" in text and "--out" in text
        for a in p._actions:
            if a.help and a.default not in (None, False) and a.dest != "help" and not a.required:
                assert "default:" in text, name


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qmbc.cli", "capacity", "--s", "1", "--eps", "0.5"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[1] == "0.5,0.5,0.5"


DETERMINISM_CASES = [
    ["simulate", "--s", "2", "--n", "54", "--labels", "optimized", "--label-runs", "40",
     "--direction", "1,0.1", "--sweep", "0.05,0.12", "--trials", "30"],
    ["simulate", "--s", "2", "--n", "54", "--labels", "binary", "--eps", "0.1,0", "--trials", "30"],
    ["de-region", "--s", "2", "--resolution", "4", "--tol", "1e-2"],
    ["label-optimize", "--s", "2", "--n", "108", "--runs", "60"],
    ["graph-gen", "--s", "3", "--n", "24"],
]


@pytest.mark.parametrize("argv", DETERMINISM_CASES, ids=lambda a: a[0] + ":" + a[4 if a[0] == "simulate" else 1])
def test_threads_byte_identical(capsys, tmp_path, argv):
    blobs = []
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}.csv"
        assert main(argv + ["--seed", "11", "--threads", threads, "--out", str(out)]) == 0
        blobs.append(out.read_bytes())
    capsys.readouterr()
    assert blobs[0] == blobs[1]
