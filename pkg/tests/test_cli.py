import io
import subprocess
import sys

import numpy as np
import pytest

from oracles import dense_trajectory
from weldroute import build_instance, deserialize
from weldroute.cli import effective_config, main, parse_n_range
from weldroute.csvio import read_csv, write_csv


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    rc = main(list(argv), stdout=out, stderr=err)
    return rc, out.getvalue(), err.getvalue()


def table(text):
    cfg, header, rows = read_csv(text)
    return cfg, header, [dict(zip(header, r)) for r in rows]


def test_gen_graph(tmp_path):
    p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
    rc, out, _ = run("gen-graph", "--n", "4", "--seed", "3", "--out", str(p1))
    assert rc == 0 and "vertices=62" in out
    run("gen-graph", "--n", "4", "--seed", "3", "--out", str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    assert deserialize(p1.read_bytes()) == build_instance(4, 3)
    rc, out, err = run("gen-graph", "--n", "2")
    assert rc == 0 and out.startswith("weldedtrees v1 n=2") and "vertices=14" in err


def test_gen_graph_bad_path(tmp_path):
    rc, _, err = run("gen-graph", "--n", "2", "--out", str(tmp_path / "missing" / "g.txt"))
    assert rc == 1 and "missing" in err


def test_usage_errors():
    assert run("gen-graph", "--n", "0")[0] == 2
    assert run("flood", "--n-range", "x..3")[0] == 2
    assert run("traversal", "--epsilon", "1.5")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["gen-graph", "--n", "2", "--n-range", "2..3"], stdout=io.StringIO(), stderr=io.StringIO())
    assert e.value.code == 2
    with pytest.raises(SystemExit):
        main(["nonsense"], stdout=io.StringIO(), stderr=io.StringIO())


def test_n_range_parsing():
    assert parse_n_range("4") == [4]
    assert parse_n_range("2..5") == [2, 3, 4, 5]
    assert parse_n_range("5..4") == []


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg_file.write_text("# experiment\nb = 8\nepsilon=0.3\nn=5\ntrials=7\n")
    cfg = effective_config("traversal", {"config": str(cfg_file), "b": 4})
    assert cfg["b"] == 4 and cfg["epsilon"] == 0.3 and cfg["n_range"] == "5" and cfg["trials"] == 7
    assert cfg["seed"] == 1
    defaults = effective_config("traversal", {})
    assert (defaults["b"], defaults["epsilon"], defaults["trials"], defaults["seed"]) == (16, 0.1, 10_000, 1)
    cfg_file.write_text("bogus=1\n")
    assert run("flood", "--config", str(cfg_file))[0] == 2


def test_walk_sweep_crosses_threshold():
    rc, out, _ = run("walk-sweep", "--n-range", "2..6", "--seeds", "3")
    assert rc == 0
    cfg, header, rows = table(out)
    assert header == ["n", "seed", "T", "p", "threshold", "above", "crossed"]
    assert cfg["log_base_range"] == "2" and cfg["command"] == "walk-sweep"
    groups = {}
    for r in rows:
        groups.setdefault((r["n"], r["seed"]), []).append(r)
    assert len(groups) == 15
    for rs in groups.values():
        assert any(r["above"] == "1" for r in rs)
        assert all(r["crossed"] == "1" for r in rs)


def test_walk_sweep_matches_dense_n2():
    rc, out, _ = run("walk-sweep", "--n", "2", "--seed", "4")
    _, _, rows = table(out)
    g = build_instance(2, 4)
    arcs, dense = dense_trajectory(g, 10)
    t_arcs = [i for i, (u, _) in enumerate(arcs) if u == g.target]
    for r in rows:
        T = int(r["T"])
        assert float(r["p"]) == pytest.approx(float(np.sum(dense[T][t_arcs] ** 2)), abs=1e-12)


def test_empty_outputs():
    for argv in (
        ("walk-sweep", "--n-range", "5..4"),
        ("walk-sweep", "--n", "1"),
        ("traversal", "--n", "3", "--trials", "0"),
        ("traversal", "--n", "3", "--trials", "0", "--summary"),
        ("lower-bound", "--n", "4", "--trials", "0"),
        ("uniformity", "--n", "3", "--trials", "0"),
        ("flood", "--n-range", "3..2"),
    ):
        rc, out, _ = run(*argv)
        assert rc == 0
        _, header, rows = read_csv(out)
        assert header and rows == [], argv


def test_traversal_csv(tmp_path):
    rc, out, _ = run("traversal", "--n", "4", "--epsilon", "0.2", "--trials", "300", "--summary")
    assert rc == 0
    cfg, _, rows = table(out)
    assert cfg["backend"] == "fast" and cfg["epsilon"] == "0.2" and cfg["log_base_eps"] == "e"
    (row,) = rows
    rate = float(row["success_rate"])
    assert rate >= 0.8 - 3 * (0.8 * 0.2 / 300) ** 0.5
    assert int(row["max_qubits"]) <= int(row["worst_case_qubits"])
    rc, out, _ = run("traversal", "--n", "3", "--trials", "5", "--backend", "register", "--b", "4")
    _, header, rows = table(out)
    assert [r["seed"] for r in rows] == ["1", "2", "3", "4", "5"]
    for r in rows:
        assert int(r["qubits"]) == 5 * int(r["rounds"])


def test_reproducible_and_threads(tmp_path):
    a = run("traversal", "--n-range", "3..4", "--trials", "6")[1]
    b = run("traversal", "--n-range", "3..4", "--trials", "6", "--threads", "2")[1]
    assert a == b
    c = run("lower-bound", "--n", "5", "--trials", "3000", "--t", "4")[1]
    d = run("lower-bound", "--n", "5", "--trials", "3000", "--t", "4", "--threads", "2")[1]
    assert c == d


def test_flood_and_lower_bound():
    _, out, _ = run("flood", "--n-range", "1..4", "--b", "4")
    _, header, rows = table(out)
    assert header == ["n", "b", "bits"]
    assert rows[0]["bits"] == "32"
    _, out, _ = run("lower-bound", "--n", "6", "--t", "2,4", "--strategy", "paths,balanced", "--trials", "500")
    _, header, rows = table(out)
    assert header == ["n", "t", "strategy", "trials", "wins", "rate", "stderr"]
    assert len(rows) == 4
    assert run("lower-bound", "--strategy", "bogus")[0] == 2


def test_uniformity_and_gap_table():
    _, out, _ = run("uniformity", "--n", "3", "--trials", "5000")
    _, header, rows = table(out)
    assert header == ["n", "tree", "node", "k", "chi2", "dof", "pvalue"]
    assert {r["tree"] for r in rows} == {"paths", "balanced", "stars-then-paths"}
    _, out, _ = run("gap-table", "--n-range", "4..5", "--trials", "5", "--lb-trials", "100")
    cfg, _, rows = table(out)
    assert cfg["b"] == "16" and len(rows) == 2
    assert float(rows[0]["game3_rate"]) >= 0


def test_write_csv_rejects_ragged_rows():
    with pytest.raises(ValueError):
        write_csv(io.StringIO(), {}, ["a", "b"], [[1]])


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "weldroute", "flood", "--n", "2"], capture_output=True, text=True, check=True
    )
    assert res.stdout.splitlines()[-1] == "2,16,320"
