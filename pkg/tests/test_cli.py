import json
import subprocess
import sys
from pathlib import Path

import pytest

from anyforest.cli import main
from anyforest.serialization import load_forest, load_order

WINE = str(Path(__file__).parent / "data" / "wine.csv")


@pytest.fixture
def forest_file(tmp_path):
    out = tmp_path / "forest.json"
    assert main(["train", "--data", WINE, "--trees", "3", "--depth", "3", "--seed", "1", "--out", str(out)]) == 0
    return out


def test_train(forest_file):
    forest = load_forest(forest_file)
    assert forest.n_trees == 3 and forest.n_classes == 3 and forest.max_depth <= 3


def test_order_and_run(forest_file, tmp_path, capsys):
    order_file = tmp_path / "o.txt"
    assert main(["order", "--data", WINE, "--seed", "1", "--forest", str(forest_file),
                 "--order", "optimal", "--out", str(order_file)]) == 0
    order = load_order(order_file)
    assert order.budgets.tolist() == load_forest(forest_file).budgets.tolist()
    result_file = tmp_path / "r.json"
    assert main(["run", "--data", WINE, "--seed", "1", "--forest", str(forest_file),
                 "--order-file", str(order_file), "--out", str(result_file)]) == 0
    result = json.loads(result_file.read_text())
    assert len(result["curve"]) == order.n_steps + 1
    assert "NMA" in capsys.readouterr().out


def test_order_cap_refusal(forest_file, tmp_path):
    assert main(["order", "--data", WINE, "--forest", str(forest_file), "--order", "optimal",
                 "--lattice-cap", "2", "--out", str(tmp_path / "o.txt")]) == 3


def test_experiment(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": WINE, "seeds": [0], "trees": [2], "depths": [2],
                               "orders": ["optimal", "bsquirrel", "depth-qwyc"]}))
    assert main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    lines = (tmp_path / "out" / "reports.jsonl").read_text().splitlines()
    status = [json.loads(line)["status"] for line in lines]
    assert status == ["ok", "ok", "unsupported"]


def test_config_error_exit(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": WINE, "orders": ["bogus"]}))
    assert main(["experiment", "--config", str(cfg)]) == 1


def test_data_error_exit(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,x\n")
    assert main(["train", "--data", str(bad), "--out", str(tmp_path / "f.json")]) == 2
    assert main(["train", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "f.json")]) == 2


def test_run_mismatched_order(forest_file, tmp_path):
    (tmp_path / "o.txt").write_text("budgets: 1\nsteps: 0\n")
    assert main(["run", "--data", WINE, "--forest", str(forest_file), "--order-file", str(tmp_path / "o.txt")]) == 2


def test_oracle(capsys):
    assert main(["oracle", "--trees", "3", "--depth", "2", "--seed", "4"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_oracle_on_forest(forest_file, capsys):
    assert main(["oracle", "--forest", str(forest_file), "--data", WINE, "--seed", "1"]) == 0
    assert main(["oracle", "--forest", str(forest_file)]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "anyforest", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "experiment" in proc.stdout
