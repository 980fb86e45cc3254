import csv
import json

import pytest

from graft import io
from graft.cli import format_sci, main
from graft.engine import init_params
from graft.generators import tiny_fc, two_branch


@pytest.fixture
def files(tmp_path):
    old, new = tiny_fc(), tiny_fc(("hp", "armor", "mana"))
    paths = {name: tmp_path / f"{name}.json" for name in ("old", "new", "params")}
    io.save(old, paths["old"], "graph")
    io.save(new, paths["new"], "graph")
    io.save(init_params(old, "signed", 7), paths["params"], "params")
    paths["dir"] = tmp_path
    return paths


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_format_sci():
    assert format_sci(0.0) == "0.0e0"
    assert format_sci(1.5e-10) == "1.5e-10"
    assert format_sci(3400.0) == "3.4e3"


def test_map_and_check(files, capsys):
    out = files["dir"] / "map.json"
    code, text, _ = run(capsys, "map", "--graph", files["old"], "--method", "oracle", "--out", out)
    assert code == 0 and "8 interactions" in text
    data = json.loads(out.read_text())
    assert data["order"] == ["hp", "mana"]
    code, text, _ = run(capsys, "check", "--graph", files["old"])
    assert code == 0 and text.strip() == "3 methods agree: 8 interactions"


def test_check_reports_disagreement(tmp_path, capsys):
    from graft.ir import GraphBuilder
    b = GraphBuilder()
    hx = b.dense(b.input(["a"]), "x", 2)
    hy = b.dense(b.input(["b"]), "y", 2)
    g = b.build([b.dense(b.op("mul", hx, hy), "out", 1)])
    path = tmp_path / "g.json"
    io.save(g, path, "graph")
    code, text, _ = run(capsys, "check", "--graph", path)
    assert code == 1 and "boolean vs gradient" in text and "boolean vs oracle" not in text


def test_surgery_one_shot(files, capsys):
    out, plan, report = (files["dir"] / n for n in ("out.json", "plan.json", "report.json"))
    code, text, _ = run(capsys, "surgery", "--old-graph", files["old"], "--old-params", files["params"],
                        "--new-graph", files["new"], "--out", out, "--plan-out", plan, "--report", report)
    assert code == 0
    assert text.strip() == "transferred 75.00%, max_abs_diff 0.0e0"
    assert json.loads(report.read_text())["states"] == 100
    steps = json.loads(plan.read_text())["steps"]
    assert [(s["op"], s["dst"], s["dst_runs"]) for s in steps] == [
        ("copy", "W", [[0, 2]]), ("init", "W", [[2, 4]]), ("copy", "W", [[4, 6]]), ("copy", "b", [[0, 2]])]


def test_stepwise_matches_one_shot(files, capsys):
    d = files["dir"]
    for name, g in (("old", files["old"]), ("new", files["new"])):
        assert run(capsys, "map", "--graph", g, "--out", d / f"{name}_map.json")[0] == 0
    assert run(capsys, "diff", "--old-graph", files["old"], "--old-map", d / "old_map.json",
               "--new-graph", files["new"], "--new-map", d / "new_map.json", "--out", d / "diff.json")[0] == 0
    assert run(capsys, "plan", "--diff", d / "diff.json", "--out", d / "plan.json")[0] == 0
    code, text, _ = run(capsys, "apply", "--plan", d / "plan.json", "--old-params", files["params"],
                        "--new-graph", files["new"], "--old-graph", files["old"], "--out", d / "step.json")
    assert code == 0 and "75.00%" in text
    run(capsys, "surgery", "--old-graph", files["old"], "--old-params", files["params"],
        "--new-graph", files["new"], "--out", d / "once.json", "--plan-out", d / "once_plan.json")
    assert (d / "step.json").read_bytes() == (d / "once.json").read_bytes()
    assert (d / "plan.json").read_bytes() == (d / "once_plan.json").read_bytes()
    code, text, _ = run(capsys, "verify", "--old-graph", files["old"], "--old-params", files["params"],
                        "--new-graph", files["new"], "--new-params", d / "step.json", "--states", 20)
    assert code == 0 and text.strip() == "20 states, max_abs_diff 0.0e0"


def test_reruns_are_byte_stable(files, capsys):
    d = files["dir"]
    outputs = []
    for k in range(2):
        run(capsys, "map", "--graph", files["new"], "--method", "gradient", "--out", d / f"m{k}.json")
        run(capsys, "surgery", "--old-graph", files["old"], "--old-params", files["params"],
            "--new-graph", files["new"], "--init", "positive_random", "--seed", 4,
            "--out", d / f"p{k}.json", "--report", d / f"r{k}.json")
        outputs.append([(d / f"{n}{k}.json").read_bytes() for n in "mpr"])
    assert outputs[0] == outputs[1]


def test_renames_file(tmp_path, capsys):
    old, new = two_branch(), two_branch(branch1=("g1", "f2"))
    for name, g in (("old", old), ("new", new)):
        io.save(g, tmp_path / f"{name}.json", "graph")
    io.save(init_params(old, "signed", 0), tmp_path / "params.json", "params")
    (tmp_path / "ren.json").write_text('{"f1": "g1"}')
    code, text, _ = run(capsys, "surgery", "--old-graph", tmp_path / "old.json", "--old-params",
                        tmp_path / "params.json", "--new-graph", tmp_path / "new.json",
                        "--renames", tmp_path / "ren.json", "--out", tmp_path / "out.json")
    assert code == 0 and text.startswith("transferred 100.00%")
    (tmp_path / "ren.json").write_text('["f1"]')
    code, _, err = run(capsys, "surgery", "--old-graph", tmp_path / "old.json", "--old-params",
                       tmp_path / "params.json", "--new-graph", tmp_path / "new.json",
                       "--renames", tmp_path / "ren.json", "--out", tmp_path / "out.json")
    assert code == 1 and "rename table" in err


def test_wrong_hash_exits_one(files, capsys):
    d = files["dir"]
    run(capsys, "surgery", "--old-graph", files["old"], "--old-params", files["params"],
        "--new-graph", files["new"], "--out", d / "o.json", "--plan-out", d / "plan.json")
    code, _, err = run(capsys, "apply", "--plan", d / "plan.json", "--old-params", files["params"],
                       "--new-graph", files["old"], "--out", d / "x.json")
    assert code == 1 and "different new graph" in err


def test_user_errors_exit_one(files, capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "check", "--graph", files["dir"] / "missing.json")[0] == 1
    bad = files["dir"] / "bad.json"
    bad.write_text('{"nodes": [')
    code, _, err = run(capsys, "check", "--graph", bad)
    assert code == 1 and "graft: error" in err


def test_bench_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code, text, _ = run(capsys, "bench", "--features", 8, "--depth", 2, "--out", out)
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["method"] for r in rows] == ["boolean", "gradient"]
    assert all(r["features"] == "8" and float(r["wall_ms"]) >= 0 for r in rows)
    assert text == out.read_text()
