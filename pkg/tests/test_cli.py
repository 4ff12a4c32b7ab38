import json
from pathlib import Path

import pytest

from adiaclique.cli import main
from adiaclique.graph import Graph, classify, generate_random_graph

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def test_gen_writes_the_generated_graph(tmp_path, capsys):
    path = tmp_path / "g.txt"
    assert main(["gen", "--n", "12", "--seed", "77", "--out", str(path)]) == 0
    assert Graph.read(path) == generate_random_graph(12, 77)
    code, out = run(capsys, "gen", "--n", "12", "--seed", "77")
    assert code == 0 and out == path.read_text()


def test_gen_with_filters(capsys):
    code, out = run(capsys, "gen", "--n", "15", "--k", "5", "--unique", "--seed", "1")
    c = classify(Graph.from_text(out))
    assert code == 0 and c.max_clique_size == 5 and c.is_unique


def test_bad_arguments_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["gen", "--n", "0"])
    assert info.value.code == 2
    assert main(["gen", "--n", "5", "--seed", "0"]) == 2


def test_classify(capsys):
    code, out = run(capsys, "classify", "--graph", DATA / "n8_unique.txt")
    data = json.loads(out)
    assert code == 0
    assert (data["max_clique_size"], data["unique"], data["cliques"]) == (4, True, [[1, 2, 3, 7]])


def test_classify_cap_exit_code(tmp_path, capsys):
    path = tmp_path / "big.txt"
    Graph.empty(25).write(path)
    assert main(["classify", "--graph", str(path)]) == 3


def test_evolve_complete_graph(tmp_path, capsys):
    state = tmp_path / "state.csv"
    code, out = run(capsys, "evolve", "--graph", DATA / "k5.txt", "--k", 3, "--T", 4, "--state-out", state)
    data = json.loads(out)
    assert code == 0 and data["p"] == pytest.approx(1.0, abs=1e-12)
    assert data["config"]["T"] == 4.0 and "state_out" not in data["config"]
    assert len(state.read_text().splitlines()) == 11


def test_evolve_is_byte_reproducible(capsys):
    argv = ["evolve", "--graph", DATA / "n8_unique.txt", "--T", 200]
    code, first = run(capsys, *argv)
    _, second = run(capsys, *argv)
    assert code == 0 and first == second
    assert json.loads(first)["p"] > 0.9


def test_find_t(capsys):
    code, out = run(capsys, "find-t", "--graph", DATA / "n8_unique.txt")
    rec = json.loads(out)["record"]
    assert code == 0 and rec["status"] == "ok" and abs(rec["p_at_T"] - 0.125) <= 0.0025


def test_campaign_outputs(tmp_path, capsys):
    csv_path = tmp_path / "r.csv"
    out_path = tmp_path / "c.json"
    code = main(["campaign", "--n", "6..8", "--count", "3", "--seed", "5", "--csv", str(csv_path),
                 "--out", str(out_path)])
    assert code == 0
    summary = json.loads(out_path.read_text())
    assert sorted(summary["per_n"]) == ["6", "7", "8"]
    assert summary["fit"] is not None and summary["config"]["count"] == 3
    rows = [ln for ln in csv_path.read_text().splitlines() if not ln.startswith("#")]
    assert rows[0] == "seed,n,k,unique,T_found,p_at_T,probes,steps,norm_drift" and len(rows) == 10

    code, out = run(capsys, "fit", "--in", out_path)
    fit = json.loads(out)
    assert code == 0 and fit["a"] == summary["fit"]["a"]
    code, out = run(capsys, "fit", "--in", csv_path)
    assert code == 0 and json.loads(out)["a"] == pytest.approx(fit["a"], rel=1e-12)
    code, out = run(capsys, "hist", "--in", out_path, "--bins", 3)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "left,right,count" and len(lines) == 4


def test_study_and_histogram(tmp_path, capsys):
    out_path = tmp_path / "s.json"
    assert main(["study", "--n", "7", "--k", "3", "--T", "5", "--count", "4", "--bins", "5",
                 "--out", str(out_path)]) == 0
    data = json.loads(out_path.read_text())
    assert len(data["probabilities"]) == 4 and sum(data["histogram"]["counts"]) == 4
    assert data["minimum"] <= data["median"]


def test_gap_csv_has_one_row_per_grid_point(tmp_path, capsys):
    path = tmp_path / "gap.csv"
    code, out = run(capsys, "gap", "--graph", DATA / "n8_unique.txt", "--grid", 101, "--out", path)
    assert code == 0 and json.loads(out)["g"] > 0
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "s,E_0,E_1,gap,matrix_element" and len(lines) == 102


def test_prep_commands(capsys):
    code, out = run(capsys, "prep", "--n", 10, "--k", 5, "--trials", 100000, "--seed", 2)
    data = json.loads(out)
    assert code == 0 and data["p_closed_form"] == pytest.approx(252 / 1024) and abs(data["z"]) < 4
    code, out = run(capsys, "prep-gap", "--n", 16)
    data = json.loads(out)
    assert code == 0 and data["k"] == 8 and data["g"] == pytest.approx(1.0, abs=0.01)


def test_config_file_supplies_arguments(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# evolve settings\ngraph = {DATA / 'k5.txt'}\nk = 2\nT = 3.5\nrel-tol = 1e-10\n")
    code, out = run(capsys, "--config", cfg, "evolve")
    data = json.loads(out)
    assert code == 0 and data["T"] == 3.5 and data["config"]["rel_tol"] == 1e-10
    # command line overrides the file
    _, out = run(capsys, "--config", cfg, "evolve", "--T", 1)
    assert json.loads(out)["T"] == 1.0

    cfg.write_text("bogus = 1\n")
    assert main(["--config", str(cfg), "evolve", "--graph", str(DATA / "k5.txt"), "--T", "1"]) == 2
