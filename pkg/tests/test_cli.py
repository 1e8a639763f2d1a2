import json
import subprocess
import sys

import pytest

from fieldnet import ModelSpec, evaluate_design, load_graph
from fieldnet.cli import main
from fieldnet.io import read_design, write_design

from .conftest import equi_design


@pytest.fixture
def two_designs(tmp_path, layout, rng):
    paths = []
    for name in ("a", "b"):
        p = tmp_path / f"{name}.csv"
        write_design(equi_design(rng), layout, p)
        paths.append(p)
    return paths


def test_generate_writes_design_and_result(tmp_path, layout, king, capsys):
    out = tmp_path / "design.csv"
    code = main(
        ["generate", "--model", "BRCNM", "--graph", "king", "--mode", "resolved",
         "--seed", "42", "--restarts", "1", "--max-passes", "3", "--out", str(out)]
    )
    assert code == 0
    res = json.loads(out.with_suffix(".json").read_text())
    d = read_design(out, layout)
    blocks = layout.factor_arrays()["block"]
    for b in range(1, 5):
        assert sorted(d.assignment[blocks == b]) == list(range(1, 22))
    phi = evaluate_design(ModelSpec.from_name("BRCNM"), layout, king, d).phi
    assert res["best_phi"] == pytest.approx(phi, rel=1e-9)
    assert res["best_phi"] <= 333.9
    assert "best_phi" in capsys.readouterr().out


def test_generate_from_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("rows = 2\ncols = 4\nsuperrows = 2\nsupercols = 4\nmodel = LNM\ngraph = farmer\n"
                   "mode = equal_replicated\ntreatments = 4\nrestarts = 40\n")
    out = tmp_path / "d.csv"
    assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads(out.with_suffix(".json").read_text())["best_phi"] == pytest.approx(9.75)


def test_evaluate_table_and_json(two_designs, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["evaluate", *map(str, two_designs), "--models", "CRM,BNM", "--graph", "king", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "CRM" in text and "BNM" in text
    data = json.loads(out.read_text())
    assert data["phi_table"]["a"]["CRM"] == pytest.approx(105.0)
    assert set(data["phi_table"]) == {"a", "b"}


def test_evaluate_two_graphs(two_designs, capsys):
    assert main(["evaluate", str(two_designs[0]), "--models", "LNM", "--graph", "king", "--graph", "farmer"]) == 0
    text = capsys.readouterr().out
    assert "LNM@king" in text and "LNM@farmer" in text


def test_compare_prints_efficiency(two_designs, capsys):
    assert main(["compare", *map(str, two_designs), "--model", "CRM"]) == 0
    out = capsys.readouterr().out
    assert "Eff" in out
    assert out.strip().endswith("1")


def test_graph_command(tmp_path, layout, farmer):
    out = tmp_path / "farmer.txt"
    assert main(["graph", "--graph", "farmer", "--out", str(out)]) == 0
    g = load_graph(out)
    assert (g.weights == farmer.weights).all() and g.directed


def test_graph_file_is_accepted(tmp_path, two_designs, capsys):
    gfile = tmp_path / "k.txt"
    main(["graph", "--graph", "king", "--out", str(gfile)])
    assert main(["evaluate", str(two_designs[0]), "--models", "LNM", "--graph", str(gfile)]) == 0


@pytest.mark.parametrize(
    "argv,msg",
    [
        (["evaluate"], "design file"),
        (["evaluate", "x.csv", "--models", "FOO"], "FOO"),
        (["generate", "--model", "XYZ"], "valid models"),
        (["generate", "--mode", "greedy"], "valid modes"),
        (["compare", "nope_a.csv", "nope_b.csv", "--model", "CRM"], "nope_a"),
        (["frobnicate"], "invalid choice"),
        ([], "usage"),
        (["generate", "--model", "LNM", "--graph", "no/such/file"], "not king"),
    ],
)
def test_invalid_input_exits_1(argv, msg, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1
    assert msg in capsys.readouterr().err


def test_run_failure_exits_2(tmp_path, capsys, monkeypatch):
    # two plots in two blocks: no estimable design exists under RBM
    monkeypatch.chdir(tmp_path)
    argv = ["generate", "--rows", "2", "--cols", "1", "--superrows", "1,1", "--supercols", "1",
            "--treatments", "2", "--model", "RBM", "--mode", "unrestricted", "--restarts", "2"]
    assert main(argv) == 2
    assert "run failed" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "fieldnet", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "generate" in out.stdout
