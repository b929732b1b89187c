"""Command-line exit codes and reports."""

from __future__ import annotations

import csv
import io
import json

import pytest

from shortcut_csp.cli import main

from conftest import DATA


def run(capsys, *argv: str) -> tuple[int, str]:
    code = main(list(argv))
    return code, capsys.readouterr().out


def reports(out: str) -> list[dict]:
    return [json.loads(line) for line in out.splitlines() if line.startswith("{")]


def test_solve_oracle_sat(capsys):
    code, out = run(capsys, "solve", str(DATA / "betweenness.json"), "--json")
    assert code == 0
    (rep,) = reports(out)
    assert rep["answer"] == "SAT" and "elapsed_s" not in rep


def test_solve_strategies_agree(capsys):
    inst = str(DATA / "sidedoor2_n6.json")
    code_o, out_o = run(capsys, "solve", inst, "--json")
    door = str(DATA / "sidedoor2_n6.door.json")
    code_s, out_s = run(capsys, "solve", inst, "--strategy", "sidedoor", "--door", door, "--map", "builtin:omega3", "--json")
    assert code_o == code_s
    rep = reports(out_s)[0]
    assert rep["bound"]["ok"] and rep["counters"]["leaves"] <= 49


@pytest.mark.parametrize("name", ["rcc5_small", "delta"])
def test_solve_backdoor_bundled(capsys, name):
    smap = {"rcc5_small": "builtin:rcc5-basic", "delta": "builtin:delta"}[name]
    inst = str(DATA / f"{name}.json")
    oracle, _ = run(capsys, "solve", inst)
    code, out = run(capsys, "solve", inst, "--strategy", "backdoor", "--door", str(DATA / f"{name}.backdoor.json"), "--map", smap, "--trace")
    assert code == oracle
    assert any(line.startswith("alpha=") for line in out.splitlines())


def test_solve_usage_errors(capsys):
    assert main(["solve", str(DATA / "rcc5_small.json"), "--strategy", "backdoor"]) == 4
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == 4


def test_solve_bad_file(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"scheme": "rcc5"}')
    assert main(["solve", str(bad)]) == 3


def test_detect_hitting_set(capsys, tmp_path):
    inst = str(DATA / "hitting_set.json")
    out_file = tmp_path / "door.json"
    code, _ = run(capsys, "detect", inst, "--kind", "backdoor", "--k", "2", "--map", "builtin:rk", "--out", str(out_file))
    assert code == 0 and len(json.loads(out_file.read_text())["pairs"]) == 2
    code, out = run(capsys, "detect", inst, "--kind", "backdoor", "--k", "1", "--map", "builtin:rk")
    assert code == 2 and out.strip() == "NONE"


def test_detect_all_target(capsys, tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({
        "scheme": "rcc5",
        "relations": {"PP": {"arity": 2, "union": ["PP"]}},
        "variables": ["a", "b"],
        "constraints": [{"rel": "PP", "scope": ["a", "b"]}],
    }))
    code, out = run(capsys, "detect", str(path), "--kind", "backdoor", "--k", "0", "--map", "builtin:rcc5-basic", "--json")
    assert code == 0 and reports(out)[0]["door"] == {"pairs": []}


def test_detect_sidedoor(capsys):
    code, out = run(capsys, "detect", str(DATA / "k3_edge_partition.json"), "--kind", "sidedoor", "--k", "1", "--r", "3", "--targets", "builtin:gamma-prime", "--json")
    assert code == 0 and reports(out)[0]["door"]["sets"] == [["v0", "v1", "v2"]]


def test_compute_simp_map(capsys, tmp_path):
    out_file = tmp_path / "rcc5.map.json"
    code, _ = run(capsys, "compute-map", "--kind", "simp", "--source", "builtin:rcc5-theta", "--target", "builtin:rcc5-basics", "--out", str(out_file))
    assert code == 0
    doc = json.loads(out_file.read_text())
    for row in doc["entries"]:
        f = row["formula"]
        assert f == "UNSAT" or len(f) <= 1


def test_compute_branch_map(capsys):
    code, out = run(capsys, "compute-map", "--kind", "branch", "--source", "builtin:rcc5-theta", "--target", "builtin:gamma-prime", "--r", "3", "--json")
    assert code == 0
    rep = reports(out)[0]
    assert rep["counters"]["factor"] <= 7 and rep["counters"]["sol_failures"] == 0


def test_compute_branch_radius_too_small(capsys):
    code = main(["compute-map", "--kind", "branch", "--source", "builtin:delta", "--target", "builtin:eq-basics", "--r", "2"])
    assert code == 3


def test_gen_commands(capsys, tmp_path):
    out_file = tmp_path / "p.json"
    door_file = tmp_path / "p.door.json"
    code, _ = run(capsys, "gen", "planted", "--n", "6", "--seed", "1", "--out", str(out_file), "--door-out", str(door_file))
    assert code == 0 and out_file.exists() and door_file.exists()
    code, out = run(capsys, "gen", "hitting-set", "--universe", "a,b,c", "--family", "a,b;c", "--k", "2")
    assert code == 0 and json.loads(out)["scheme"] == "eq"
    code, out = run(capsys, "gen", "edge-partition", "--complete", "3", "--json")
    assert code == 0 and reports(out)[0]["k"] == 1
    code, out = run(capsys, "gen", "rk", "--k", "3")
    assert code == 0 and json.loads(out)["arity"] == 3


def test_bench_backdoor_rows(capsys):
    code, out = run(capsys, "bench", "--suite", "planted-backdoor", "--strategy", "backdoor", "--count", "5", "--seed", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 5
    for row in rows:
        assert int(row["counter"]) <= 5 ** int(row["door_size"])
        assert row["agree"] == "True"


def test_bench_sidedoor_on_backdoor_suite(capsys):
    code, out = run(capsys, "bench", "--suite", "planted-backdoor", "--strategy", "sidedoor", "--count", "5", "--seed", "3")
    assert code == 0
    for row in csv.DictReader(io.StringIO(out)):
        assert int(row["counter"]) <= 2 ** int(row["door_size"])


def test_bench_fixed_seed_bytes(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["bench", "--count", "4", "--seed", "9", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
