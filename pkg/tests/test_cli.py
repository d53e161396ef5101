import json

import pytest

from tightham import io
from tightham.cli import EXIT_BUDGET, EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from tightham.hypergraph import Graph


def _gen(tmp_path, *args):
    out = tmp_path / "h.h3"
    assert main(["gen", *args, "-o", str(out)]) == EXIT_OK
    return str(out)


def _json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_gen_and_report(tmp_path, capsys):
    f = _gen(tmp_path, "--kind", "i", "--n", "9")
    assert main(["--json", "report", "--in", f]) == EXIT_OK
    d = _json(capsys)
    assert d["n"] == 9 and d["edges"] == 54 and d["min_degree"] == 13


def test_gen_random_is_seeded(tmp_path):
    a = _gen(tmp_path, "--kind", "random", "--n", "12", "--p", "0.5", "--seed", "4")
    first = open(a).read()
    b = _gen(tmp_path, "--kind", "random", "--n", "12", "--p", "0.5", "--seed", "4")
    assert open(b).read() == first


def test_solve_exact_and_verify(tmp_path, capsys):
    f = _gen(tmp_path, "--kind", "complete", "--n", "7")
    cyc = tmp_path / "c.txt"
    assert main(["solve-exact", "--in", f, "--out", str(cyc)]) == EXIT_OK
    assert main(["verify", "--in", f, "--cycle", str(cyc)]) == EXIT_OK
    cyc.write_text("0 1 2 3 4 5\n")
    assert main(["verify", "--in", f, "--cycle", str(cyc)]) == EXIT_FAIL


def test_solve_exact_extremal_is_negative(tmp_path, capsys):
    f = _gen(tmp_path, "--kind", "ii", "--n", "9")
    assert main(["solve-exact", "--in", f, "--json"]) == EXIT_FAIL
    assert _json(capsys)["outcome"] == "none"


def test_solve_exact_budget(tmp_path):
    f = _gen(tmp_path, "--kind", "complete", "--n", "10")
    g = _gen(tmp_path, "--kind", "i", "--n", "12")
    assert main(["solve-exact", "--in", g, "--max-states", "5"]) == EXIT_BUDGET
    assert main(["solve-exact", "--in", f, "--max-states", "5"]) in (EXIT_OK, EXIT_BUDGET)


def test_solve_absorb_small_and_report(tmp_path, capsys):
    f = _gen(tmp_path, "--kind", "complete", "--n", "12")
    rep = tmp_path / "r.json"
    assert main(["solve-absorb", "--in", f, "--report", str(rep)]) == EXIT_FAIL
    assert json.loads(rep.read_text())["stage"] == "config"


def test_solve_absorb_complete(tmp_path, capsys):
    f = _gen(tmp_path, "--kind", "complete", "--n", "50")
    cyc = tmp_path / "c.txt"
    assert main(["--json", "solve-absorb", "--in", f, "--seed", "1", "--out", str(cyc)]) == EXIT_OK
    assert _json(capsys)["outcome"] == "cycle"
    assert main(["verify", "--in", f, "--cycle", str(cyc)]) == EXIT_OK


def test_matching(tmp_path, capsys):
    f = _gen(tmp_path, "--kind", "iii", "--n", "9")
    assert main(["matching", "--in", f, "--json"]) == EXIT_OK
    d = _json(capsys)
    assert d["exact"] and d["size"] < 3


def test_graph_verbs(tmp_path, capsys):
    g = tmp_path / "g.g2"
    g.write_bytes(io.serialize_g2(Graph.complete(5)))
    assert main(["count-paths", "--in", str(g), "--x", "0", "--y", "1", "--length", "2", "--json"]) == EXIT_OK
    assert _json(capsys)["count"] == 3
    assert main(["count-paths", "--in", str(g), "--x", "0", "--y", "1", "--length", "2", "--walks", "--json"]) == EXIT_OK
    assert _json(capsys)["count"] == 3
    assert main(["longest-path", "--in", str(g), "--json"]) == EXIT_OK
    assert _json(capsys)["length"] == 4
    assert main(["count-paths", "--in", str(g), "--x", "0", "--y", "9", "--length", "2"]) == EXIT_INPUT


def test_robust_and_absorbers(tmp_path, capsys):
    f = _gen(tmp_path, "--kind", "random", "--n", "30", "--p", "0.9", "--seed", "1")
    assert main(["robust", "--in", f, "--vertex", "3", "--json"]) == EXIT_OK
    d = _json(capsys)
    assert d["vertex"] == 3 and len(d["U"]) > 15
    rep = tmp_path / "all.json"
    assert main(["robust", "--in", f, "--all", "--report", str(rep)]) == EXIT_OK
    assert len(json.loads(rep.read_text())["vertices"]) == 30
    assert main(["robust", "--in", f, "--vertex", "99"]) == EXIT_INPUT
    assert main(["absorbers", "--in", f, "--vertex", "2", "--limit", "2", "--json"]) == EXIT_OK
    rows = _json(capsys)["absorbers"]
    assert 1 <= len(rows) <= 2 and all(len(r) == 9 for r in rows)


@pytest.mark.parametrize(
    "argv",
    [
        ["report", "--in", "/nonexistent.h3"],
        ["gen", "--kind", "iv", "--n", "9"],
        ["robust", "--in", "x.h3"],
        ["bogus"],
    ],
)
def test_input_errors(argv, capsys):
    assert main(argv) == EXIT_INPUT


def test_malformed_file(tmp_path, capsys):
    f = tmp_path / "bad.h3"
    f.write_text("h3 5 1\n2 1 0\n")
    assert main(["report", "--in", str(f)]) == EXIT_INPUT
    assert "unsorted" in capsys.readouterr().err
