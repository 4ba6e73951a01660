import csv
import io
import json
import subprocess
import sys

import pytest

from rotorlab import cli
from rotorlab.experiments import CSV_HEADER

TRI = {"n": 3, "edges": [[0, 1], [1, 2], [0, 2]], "sink_edges": [[2, 1]]}
PATH01 = {"n": 2, "edges": [[0, 1]], "sink_edges": [[1, 1]]}


@pytest.fixture
def files(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "tri.json").write_text(json.dumps(TRI))
    (tmp_path / "path01.json").write_text(json.dumps(PATH01))
    return tmp_path


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_walk_example(files, capsys):
    code, out, _ = run(capsys, "walk", "--graph", "file:path01.json", "--start", "0", "--rotors", "forest")
    assert code == 0
    assert "odometer {0: 2, 1: 2}" in out


def test_walk_zero_and_list(files, capsys):
    assert "odometer {0: 1, 1: 1}" in run(capsys, "walk", "--graph", "file:path01.json", "--rotors", "zero")[1]
    assert "odometer {0: 2, 1: 2}" in run(capsys, "walk", "--graph", "file:path01.json", "--rotors", "0,1")[1]


def test_stationarity_example(files, capsys):
    code, out, _ = run(capsys, "stationarity-exact", "--graph", "file:tri.json", "--all-starts",
                       "--json", "rep.json")
    assert code == 0
    assert out.count("permutation") == 3
    doc = json.loads((files / "rep.json").read_text())
    assert [len(r["details"]["permutation"]) for r in doc["reports"]] == [3, 3, 3]


def test_odometer_csv(files, capsys):
    argv = ["odometer", "--graph", "lattice:d=2,R=3", "--start", "origin", "--trials", "400", "--seed", "42",
            "--csv", "-"]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == CSV_HEADER
    assert float(rows[0]["estimate"]) > 0 and float(rows[0]["reference"]) > 0
    assert run(capsys, *argv)[1] == out


def test_csv_file_and_summary(files, capsys):
    code, out, _ = run(capsys, "count-forests", "--graph", "file:tri.json", "--csv", "c.csv")
    assert code == 0
    assert "estimate=3" in out
    assert (files / "c.csv").read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_sample_forest(files, capsys):
    code, out, _ = run(capsys, "sample-forest", "--graph", "file:tri.json", "--trials", "2", "--seed", "1")
    assert code == 0
    docs = [json.loads(line) for line in out.splitlines()]
    assert len(docs) == 2 and all(len(d["parent"]) == 3 and d["seed"] == 1 for d in docs)
    assert run(capsys, "sample-forest", "--graph", "file:tri.json", "--check")[0] == 0


def test_dry_run(files, capsys):
    code, out, _ = run(capsys, "odometer", "--graph", "lattice:d=3,R=10", "--start", "origin", "--dry-run")
    assert code == 0
    plan = json.loads(out)
    assert plan["n_active"] == 21 ** 3
    assert plan["start_index"] == (21 ** 3) // 2
    assert plan["enumerable"] is False


def test_dry_run_tail(files, capsys):
    code, out, _ = run(capsys, "tail-decay", "--graph", "lattice:d=2,R=3", "--start", "origin",
                       "--R-list", "2,3", "--dry-run")
    assert code == 0
    assert [g["R"] for g in json.loads(out)["graphs"]] == [2, 3]


def test_tail_decay_runs(files, capsys):
    code, out, _ = run(capsys, "tail-decay", "--graph", "lattice:d=2,R=4", "--start", "origin",
                       "--trials", "2000", "--r-list", "1,3")
    assert code in (0, 1)
    assert "decay_E" in out and "decay_D" in out


@pytest.mark.parametrize("argv,code", [
    (["walk", "--graph", "lattice:d=0,R=2"], cli.EXIT_GRAPH),
    (["walk", "--graph", "nonsense"], cli.EXIT_GRAPH),
    (["walk", "--graph", "file:missing.json"], cli.EXIT_GRAPH),
    (["walk", "--graph", "file:tri.json", "--start", "9"], cli.EXIT_GRAPH),
    (["walk", "--graph", "file:tri.json", "--rotors", "5,0,0"], cli.EXIT_USAGE),
    (["odometer", "--graph", "file:tri.json", "--trials", "5"], cli.EXIT_USAGE),
])
def test_error_codes(files, capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_budget_code(files, capsys, monkeypatch):
    monkeypatch.setenv("ROTORLAB_BUDGET", "enum=10")
    assert run(capsys, "stationarity-exact", "--graph", "lattice:d=2,R=2")[0] == cli.EXIT_BUDGET


def test_unknown_experiment(files):
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == cli.EXIT_USAGE


def test_help_lists_exit_codes():
    proc = subprocess.run([sys.executable, "-m", "rotorlab.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for code in "012345":
        assert f"\n  {code}  " in proc.stdout


def test_selftest_only(capsys):
    code, out, err = run(capsys, "selftest", "--only", "1")
    assert code == 0
    assert out.strip().startswith("criterion-1")
