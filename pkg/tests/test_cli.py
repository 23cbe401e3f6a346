import json

import pytest

from lvkahan import cli
from lvkahan.graphs import random_labeled_tree
from lvkahan.lvsys import tree_adjacency

BUSHY = {"n": 4, "edges": [[1, 2], [2, 3], [2, 4]]}
TRIANGLE_PENDANT = {"n": 4, "edges": [[1, 2], [2, 3], [3, 4], [2, 4]]}
K4 = {"n": 4, "edges": [[1, 2], [1, 3], [1, 4], [2, 3], [2, 4], [3, 4]]}


@pytest.fixture
def graph_file(tmp_path):
    def write(data, name="g.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return write


def run(capsys, *argv):
    code = cli.main([*argv, "--jobs", "1"] if argv[0] != "enumerate" else list(argv))
    out = capsys.readouterr().out
    return code, out


def test_build_bushy_and_triangle_pendant(capsys, graph_file):
    code, out = run(capsys, "build", "--graph", graph_file(BUSHY))
    assert code == 0
    data = json.loads(out)
    assert data["free_parameters"] == 10
    code, out = run(capsys, "build", "--graph", graph_file(TRIANGLE_PENDANT))
    assert code == 0 and json.loads(out)["free_parameters"] == 9


def test_input_errors_exit_2(capsys, graph_file, tmp_path):
    assert cli.main(["build", "--graph", graph_file({"n": 4, "edges": [[1, 2], [3, 4]]})]) == 2
    assert cli.main(["build", "--graph", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["build", "--graph", graph_file({"n": 3, "edges": [[1, 1]]})]) == 2
    assert cli.main(["drift", "--graph", graph_file(BUSHY), "--mode", "exact"]) == 2
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"a1": 1}))
    assert cli.main(["step", "--graph", graph_file(BUSHY), "--params", str(params)]) == 2
    capsys.readouterr()


def test_verify_bushy_symbolic(capsys, graph_file):
    code, out = run(capsys, "verify", "--graph", graph_file(BUSHY))
    assert code == 0 and json.loads(out)["ok"]


def test_verify_random_tree_n8_probabilistic(capsys, graph_file):
    import random

    t = random_labeled_tree(8, random.Random(7))
    g = {"n": 8, "edges": [list(e) for e in t.edges]}
    code, out = run(capsys, "verify", "--graph", graph_file(g), "--mode", "exact", "--seed", "7")
    assert code == 0 and json.loads(out)["ok"]


def test_verify_mutated_matrix_fails(capsys, graph_file, monkeypatch):
    def mutated(g):
        sys_ = tree_adjacency(cli.TreeData.from_graph(g.sorted()))
        # break the row condition A_31 == A_21 of the bushy tree
        sys_.A[2][0] = sys_.A[2][0] + sys_.ring.gen("a1")
        return sys_

    monkeypatch.setattr(cli, "system_for_graph", mutated)
    code, out = run(capsys, "verify", "--graph", graph_file(BUSHY))
    assert code == 1
    failed = [r["identity"] for r in json.loads(out)["results"] if not r["ok"]]
    assert "dp_ode" in failed and "measure" in failed


def test_enumerate_counts(capsys):
    for n, count in [(4, 2), (5, 6)]:
        code, out = run(capsys, "enumerate", "--n", str(n))
        assert code == 0 and json.loads(out)["count"] == count


def test_step_h_zero_is_constant(capsys, graph_file):
    code, out = run(capsys, "step", "--graph", graph_file(BUSHY), "--h", "0", "--steps", "5")
    states = json.loads(out)["states"]
    assert code == 0 and len(states) == 6 and all(s == states[0] for s in states)


def test_output_is_byte_identical(capsys, graph_file):
    g = graph_file(TRIANGLE_PENDANT)
    outs = {run(capsys, "step", "--graph", g, "--seed", "5", "--steps", "3", "--format", "csv")[1] for _ in range(2)}
    assert len(outs) == 1
    outs = {run(capsys, "integrals", "--graph", g, "--seed", "5")[1] for _ in range(2)}
    assert len(outs) == 1


def test_integrals_triangle_pendant(capsys, graph_file):
    code, out = run(capsys, "integrals", "--graph", graph_file(TRIANGLE_PENDANT))
    data = json.loads(out)
    assert code == 0
    assert data["raw_count"] == 2 and data["rank"] == 1 and data["lower_bound"] == 1
    assert [r for r in data["relations"] if not r["trivial"] and r["verified"]]


def test_entropy_k4_is_exponential(capsys, graph_file, monkeypatch):
    monkeypatch.setenv("LVKAHAN_DEGREE_CAP", "100000")
    code, out = run(capsys, "entropy", "--graph", graph_file(K4), "--steps", "8")
    data = json.loads(out)
    assert code == 0 and data["verdict"] == "exponential" and not data["overflow"]


def test_entropy_overflow_is_inconclusive(capsys, graph_file, monkeypatch):
    monkeypatch.setenv("LVKAHAN_DEGREE_CAP", "100")
    code, out = run(capsys, "entropy", "--graph", graph_file(K4), "--steps", "8")
    data = json.loads(out)
    assert code == 0 and data["verdict"] == "inconclusive" and data["overflow"]


def test_drift_writes_csv(capsys, graph_file, tmp_path):
    out = tmp_path / "drift.csv"
    code = cli.main(["drift", "--graph", graph_file(BUSHY), "--steps", "20", "--format", "csv", "--out", str(out)])
    lines = out.read_text().splitlines()
    assert code == 0 and lines[0] == "k,kahan,rk4" and len(lines) == 22
