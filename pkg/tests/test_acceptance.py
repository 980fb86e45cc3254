"""Acceptance suite: one test per criterion, each with its own time budget.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
prints a PASS/FAIL line per criterion.
"""

import json
import sys
import time

import numpy as np
import pytest

from graft import io
from graft.cli import main, run_bench
from graft.engine import backward, forward, init_params, mapping_safe_transform
from graft.generators import maxpool_masking_fixture, random_graph, relu_masking_fixture, tiny_fc, two_branch
from graft.mapping import boolean_map, gradient_map, maps_equal, oracle_map, propagate

from conftest import finite_difference, relative_error
from test_engine import OP_CASES, _kink_free, _op_graph


@pytest.fixture
def criterion(record_property):
    def label(text):
        record_property("criterion", text)
    return label


def test_c1_three_way_agreement(criterion):
    criterion("1 three-way mapper agreement on 60 random graphs")
    t0 = time.perf_counter()
    sizes = set()
    for seed in range(60):
        g = random_graph(seed)
        sizes.add(len(g.feature_names))
        _, bmap = boolean_map(g)
        for other in (oracle_map(g), gradient_map(g, seed=seed)):
            report = maps_equal(bmap, other)
            assert report.equal, (seed, report.lines()[:5])
    assert min(sizes) <= 8 and max(sizes) >= 40
    assert time.perf_counter() - t0 < 120


def test_c2_masking_reproduction(criterion):
    criterion("2 unsafe gradient mapping misses interactions, safe finds all")
    t0 = time.perf_counter()
    for fixture in (relu_masking_fixture, maxpool_masking_fixture):
        g, params = fixture()
        truth = oracle_map(g)
        masked = gradient_map(g, safe=False, params=params)
        assert masked.count() < truth.count()
        assert masked.triples() < truth.triples()
        assert gradient_map(g) == truth
        signed = [gradient_map(g, seed=s, init="signed", safe=False).count() for s in range(5)]
        assert min(signed) < truth.count()
    assert time.perf_counter() - t0 < 10


def test_c3_speed_ordering(criterion):
    criterion("3 boolean mapping at most half the gradient mapping time")
    t0 = time.perf_counter()
    best = None
    for _ in range(3):
        rows = {m: ms for m, _, ms in run_bench(128, 3)}
        ratio = rows["boolean"] / rows["gradient"]
        best = ratio if best is None else min(best, ratio)
    print(f"boolean/gradient wall time ratio {best:.3f}")
    assert best <= 0.5
    assert time.perf_counter() - t0 < 60


SURGERY_CASES = [
    # name, old, new, renames, copied / total counted by hand
    ("insertion", tiny_fc(), tiny_fc(("hp", "armor", "mana")), None, 6 / 8),
    ("removal", tiny_fc(("hp", "mana", "armor")), tiny_fc(), None, 6 / 6),
    ("reorder", tiny_fc(), tiny_fc(("mana", "hp")), None, 6 / 6),
    ("group shift", two_branch(), two_branch(branch2=("f3", "f4"), swap=True), None, 25 / 27),
    ("rename", two_branch(), two_branch(branch1=("g1", "f2")), {"f1": "g1"}, 25 / 25),
]


def test_c4_output_preserving_surgery(criterion, tmp_path):
    criterion("4 one-shot surgery preserves outputs and reports hand-counted transfer")
    t0 = time.perf_counter()
    for k, (name, old, new, renames, expected) in enumerate(SURGERY_CASES):
        d = tmp_path / str(k)
        d.mkdir()
        io.save(old, d / "old.json", "graph")
        io.save(new, d / "new.json", "graph")
        io.save(init_params(old, "signed", k), d / "params.json", "params")
        argv = ["surgery", "--old-graph", d / "old.json", "--old-params", d / "params.json",
                "--new-graph", d / "new.json", "--out", d / "out.json", "--report", d / "report.json"]
        if renames:
            (d / "renames.json").write_text(json.dumps(renames))
            argv += ["--renames", d / "renames.json"]
        assert main([str(a) for a in argv]) == 0, name
        report = json.loads((d / "report.json").read_text())
        assert report["states"] == 100
        assert report["max_abs_diff"] <= 1e-9, name
        assert report["transfer_pct"] == pytest.approx(100 * expected, abs=1e-9), name
    assert time.perf_counter() - t0 < 30


def test_c5_gradient_correctness(criterion):
    criterion("5 autodiff matches central differences on every op kind")
    t0 = time.perf_counter()
    worst = 0.0
    for kind in OP_CASES:
        rng = np.random.default_rng(100 + OP_CASES.index(kind))
        checked = 0
        for trial in range(60):
            g = _op_graph(kind, rng)
            params = init_params(g, "signed", seed=1000 + trial)
            inputs = {0: rng.uniform(-1, 1, size=(1, 4))}
            if not _kink_free(g, params, inputs):
                continue
            ana = backward(g, params, inputs)
            num = finite_difference(g, params, inputs, h=1e-4)
            worst = max([worst] + [relative_error(ana[p], num[p]) for p in ana])
            checked += 1
            if checked == 5:
                break
        assert checked == 5, kind
    print(f"worst relative error {worst:.2e}")
    assert worst <= 1e-4
    assert time.perf_counter() - t0 < 30


def test_c6_positivity_is_feature_membership(criterion):
    criterion("6 positive forward scalars coincide with boolean feature sets")
    t0 = time.perf_counter()
    probes = 0
    for seed in range(20):
        g, _ = mapping_safe_transform(random_graph(500 + seed))
        params = init_params(g, "positive", seed)
        feats, _ = propagate(g)
        live = g.ancestors_with_input()
        for t, (nid, idx) in enumerate(g.feature_positions().values()):
            inputs = {n.id: np.zeros(n.shape) for n in g.inputs}
            inputs[nid][0, idx] = 1.0
            _, tape = forward(g, params, inputs)
            for node in g:
                if node.id in live:
                    value = np.asarray(tape[node.id])
                    assert np.all(value >= 0)
                    assert np.array_equal(value > 0, feats[node.id][..., t]), (seed, node.id)
            probes += 1
    assert probes >= 40
    assert time.perf_counter() - t0 < 60


def _run_all_commands(d, seed):
    old, new = d / "old.json", d / "new.json"
    calls = [
        ["map", "--graph", old, "--method", "boolean", "--out", d / "old_map.json"],
        ["map", "--graph", new, "--method", "gradient", "--seed", seed, "--out", d / "new_map.json"],
        ["map", "--graph", new, "--method", "oracle", "--out", d / "new_oracle.json"],
        ["check", "--graph", new, "--seed", seed],
        ["diff", "--old-graph", old, "--old-map", d / "old_map.json", "--new-graph", new,
         "--new-map", d / "new_map.json", "--out", d / "diff.json"],
        ["plan", "--diff", d / "diff.json", "--init", "positive_random", "--seed", seed, "--out", d / "plan.json"],
        ["apply", "--plan", d / "plan.json", "--old-params", d / "params.json", "--new-graph", new,
         "--old-graph", old, "--out", d / "applied.json"],
        ["surgery", "--old-graph", old, "--old-params", d / "params.json", "--new-graph", new, "--seed", seed,
         "--out", d / "surgery.json", "--plan-out", d / "surgery_plan.json", "--report", d / "report.json"],
        ["verify", "--old-graph", old, "--old-params", d / "params.json", "--new-graph", new,
         "--new-params", d / "applied.json", "--seed", seed, "--out", d / "verify.json"],
    ]
    for argv in calls:
        assert main([str(a) for a in argv]) == 0, argv[0]
    return {p.name: p.read_bytes() for p in sorted(d.glob("*.json"))}


def test_c7_round_trip_and_byte_stability(criterion, tmp_path, capsys):
    criterion("7 serializers round-trip and commands are byte-stable")
    old, new = two_branch(), two_branch(branch2=("f3", "f4"), swap=True)
    snapshots = []
    for run in range(2):
        d = tmp_path / str(run)
        d.mkdir()
        io.save(old, d / "old.json", "graph")
        io.save(new, d / "new.json", "graph")
        io.save(init_params(old, "signed", 11), d / "params.json", "params")
        snapshots.append(_run_all_commands(d, 3))
        snapshots[-1]["stdout"] = capsys.readouterr().out.encode()
    assert snapshots[0] == snapshots[1]

    d = tmp_path / "0"
    for name, kind in (("old.json", "graph"), ("params.json", "params"), ("new_map.json", "imap"),
                       ("plan.json", "plan"), ("diff.json", "diff")):
        text = (d / name).read_text()
        assert io.serialize(io.deserialize(text, kind), kind) == text, name
    for seed in range(10):
        g = random_graph(seed)
        text = io.serialize(g, "graph")
        assert io.deserialize(text, "graph") == g
        params = init_params(g, "signed", seed)
        assert io.deserialize(io.serialize(params, "params"), "params") == params
        imap = boolean_map(g)[1]
        assert io.deserialize(io.serialize(imap, "imap"), "imap") == imap


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
