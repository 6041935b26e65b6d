import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import toy_mdps, value_iteration, wilkinson
from elimq.cli import main
from elimq.qlearning import Policy, load_qtable
from elimq.sparse import SparseMatrix, read_matrix_market, write_matrix_market


@pytest.fixture
def corpus(tmp_path):
    out = tmp_path / "corpus"
    assert main(["gen", "path", "5", "star", "6", "arrow:7", "--seed", "1", "--out", str(out)]) == 0
    return out


def write_dense(path, a):
    write_matrix_market(path, SparseMatrix.from_dense(np.asarray(a, dtype=float)))
    return str(path)


def test_gen_single_and_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gen", "path", "5", "--out", str(a)]) == 0
    assert [p.name for p in a.glob("*.mtx")] == ["000-path-5.mtx"]
    assert main(["gen", "grid2d", "3", "3", "random:10:0.3", "--seed", "4", "--out", str(a)]) == 0
    assert main(["gen", "grid2d", "3", "3", "random:10:0.3", "--seed", "4", "--out", str(b)]) == 0
    for f in a.glob("*"):
        if f.name.startswith("000-grid") or f.name.startswith("001-"):
            assert f.read_bytes() == (b / f.name).read_bytes()
    assert read_matrix_market(a / "000-grid2d-3x3.mtx").n == 9


def test_gen_unknown_family(tmp_path, capsys):
    assert main(["gen", "mobius", "4", "--out", str(tmp_path)]) == 2
    assert "unknown family" in capsys.readouterr().err


def test_train_ordering_single_path(tmp_path):
    c = tmp_path / "c"
    main(["gen", "path:5", "--out", str(c)])
    q = tmp_path / "q.json"
    assert main(["train", "--domain", "ordering", "--corpus", str(c), "--episodes", "50",
                 "--qtable", str(q)]) == 0
    pol = Policy(load_qtable(q.read_text()), "MD")
    out = tmp_path / "r.json"
    assert main(["solve", str(c / "000-path-5.mtx"), "--qtable", str(q), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["ordering"]["total_fill"] == 0
    rows = list(csv.reader(open(tmp_path / "q.curve.csv")))
    assert rows[0] == ["episode", "return", "epsilon"] and len(rows) == 51
    assert pol.domain == "ordering"


def test_train_missing_corpus(tmp_path):
    assert main(["train", "--domain", "ordering", "--corpus", str(tmp_path / "nope")]) == 2


def test_train_toy_matches_oracle(tmp_path):
    mdp, gamma = toy_mdps()[1]
    f = tmp_path / "toy.json"
    f.write_text(json.dumps(mdp.to_dict()))
    q = tmp_path / "q.json"
    assert main(["train", "--domain", "toy", "--corpus", str(f), "--episodes", "4000",
                 "--alpha", "0.2", "--gamma", str(gamma), "--epsilon-start", "1", "--epsilon-end", "1",
                 "--qtable", str(q)]) == 0
    t = load_qtable(q.read_text())
    oracle = value_iteration(mdp, gamma)
    for s in mdp.states():
        best = max(range(3), key=lambda a: (oracle[(s, a)], -a))
        assert t.greedy(mdp.key(s)) == best


def test_solve_reports(tmp_path):
    out = tmp_path / "r.json"
    assert main(["solve", write_dense(tmp_path / "eye.mtx", np.eye(3)), "--out", str(out)]) == 0
    r = json.loads(out.read_text())
    assert r["factor"]["rho"] == 1.0 and r["ordering"]["total_fill"] == 0 and r["seed"] == 0

    w = write_dense(tmp_path / "w.mtx", wilkinson(4))
    assert main(["solve", w, "--pivot", "PP", "--out", str(out), "--csv", str(tmp_path / "s.csv")]) == 0
    assert json.loads(out.read_text())["factor"]["rho"] == 8.0
    assert (tmp_path / "s.csv").read_text().startswith("id,n,nnz")


def test_solve_errors(tmp_path):
    z = tmp_path / "z.mtx"
    z.write_text("%%MatrixMarket matrix coordinate real general\n3 3 0\n")
    assert main(["solve", str(z)]) == 3
    assert main(["solve", str(tmp_path / "missing.mtx")]) == 2
    assert main(["solve", write_dense(tmp_path / "e.mtx", np.eye(2)), "--pivot", "XX"]) == 2


def test_bench_shape_and_learned(tmp_path, corpus):
    out = tmp_path / "b.csv"
    assert main(["bench", "--corpus", str(corpus), "--strategies", "MD,MMDF", "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["matrix", "n", "nnz", "MD", "MMDF"] and rows[-1][0] == "mean" and len(rows) == 5

    q = tmp_path / "q.json"
    main(["train", "--domain", "ordering", "--corpus", str(corpus), "--episodes", "200", "--qtable", str(q)])
    fixed = ",".join(["MD", "AMD", "MMDF", "MIND", "MMF"])
    assert main(["bench", "--corpus", str(corpus), "--strategies", fixed, "--qtable", str(q),
                 "--out", str(out)]) == 0
    mean = list(csv.reader(open(out)))[-1]
    values = [float(v) for v in mean[3:]]
    assert values[-1] <= max(values[:-1])


def test_bench_parallel_matches_sequential(tmp_path, corpus):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["bench", "--corpus", str(corpus), "--domain", "pivoting", "--strategies", "PP,CP", "--out", str(a)])
    main(["bench", "--corpus", str(corpus), "--domain", "pivoting", "--strategies", "PP,CP",
          "--jobs", "2", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_bench_empty_corpus(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["bench", "--corpus", str(tmp_path / "empty"), "--strategies", "MD"]) == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# corpus settings\nseed = 9\nout = %s\n" % (tmp_path / "fromcfg"))
    assert main(["gen", "random:8:0.5", "--config", str(cfg)]) == 0
    manifest = json.loads((tmp_path / "fromcfg" / "manifest.json").read_text())
    assert manifest["seed"] == 9
    assert main(["gen", "random:8:0.5", "--config", str(cfg), "--seed", "2"]) == 0
    assert json.loads((tmp_path / "fromcfg" / "manifest.json").read_text())["seed"] == 2
    cfg.write_text("bogus = 1\n")
    assert main(["gen", "path:3", "--config", str(cfg)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "elimq", "gen", "path:4", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run([sys.executable, "-m", "elimq", "frobnicate"], capture_output=True, text=True)
    assert r.returncode == 2
