import pytest

from graft.errors import AmbiguousMatchError, CoverageError
from graft.generators import tiny_fc, two_branch
from graft.io import graph_hash, serialize
from graft.ir import GraphBuilder
from graft.mapping import boolean_map
from graft.planner import Block, CopyStep, InitStep, build_group_table, check_coverage, diff_maps, make_plan


def table(graph):
    return build_group_table(boolean_map(graph)[0], graph_hash(graph))


def surgery_plan(old, new, init="zero", renames=None):
    return make_plan(diff_maps(table(old), table(new), renames), init)


def test_group_table_tiny_fc(tiny):
    t = table(tiny)
    assert t[("hp",)] == [Block("W", ((0, 2),))]
    assert t[("mana",)] == [Block("W", ((2, 4),))]
    assert t[("hp", "mana")] == [Block("b", ((0, 2),))]
    assert len(t) == 3


def test_group_table_two_branch(branchy):
    t = table(branchy)
    assert t[("f1",)] == [Block("W1", ((0, 2),))]
    assert t[("f3",)] == [Block("W2", ((0, 2),)), Block("W3", ((6, 12),)), Block("b2", ((0, 2),))]
    assert t[("f1", "f2")] == [Block("W3", ((0, 6),)), Block("b1", ((0, 2),))]
    assert t[("f1", "f2", "f3")] == [Block("b3", ((0, 3),))]
    assert t[("f3",)][0].size == 2


def test_group_table_without_params():
    b = GraphBuilder()
    x = b.input(["a"])
    g = b.build([b.op("tanh", x)])
    assert len(table(g)) == 0


def test_unannotated_elements_use_empty_key():
    b = GraphBuilder()
    x = b.input(["a"])
    g = b.build([x, b.op("tanh", b.param("c", (1, 1)))])
    assert table(g)[()] == [Block("c", ((0, 1),))]


def test_diff_insertion():
    d = diff_maps(table(tiny_fc()), table(tiny_fc(("hp", "armor", "mana"))))
    assert d.kept == {"hp", "mana"} and d.inserted == {"armor"} and not d.removed
    assert d.fresh_blocks == [Block("W", ((2, 4),))]
    assert [(k, str(o), str(n)) for k, o, n in d.moved_groups] == [(("mana",), "W[[2, 4]]", "W[[4, 6]]")]
    assert not d.retired_blocks


def test_diff_identity(branchy):
    d = diff_maps(table(branchy), table(branchy))
    assert not d.inserted and not d.removed and not d.moved_groups and not d.fresh_blocks
    assert len(d.matched) == 8


def test_diff_reorder_is_pure_move():
    d = diff_maps(table(tiny_fc()), table(tiny_fc(("mana", "hp"))))
    assert not d.fresh_blocks and not d.retired_blocks
    assert len(d.moved_groups) == 2


def test_diff_removal():
    d = diff_maps(table(tiny_fc(("hp", "mana", "armor"))), table(tiny_fc()))
    assert d.removed == {"armor"}
    assert d.retired_blocks == [Block("W", ((4, 6),))]
    assert not d.fresh_blocks


def test_insertion_plan():
    old, new = tiny_fc(), tiny_fc(("hp", "armor", "mana"))
    plan = surgery_plan(old, new)
    assert plan.steps == (
        CopyStep("W", ((0, 2),), "W", ((0, 2),)),
        InitStep("W", ((2, 4),), "zero", 0),
        CopyStep("W", ((2, 4),), "W", ((4, 6),)),
        CopyStep("b", ((0, 2),), "b", ((0, 2),)),
    )
    assert plan.old_hash == graph_hash(old) and plan.new_hash == graph_hash(new)
    assert plan.copied_elements() == 6 and plan.total_elements() == 8


def test_identity_plan_copies_everything(branchy):
    plan = surgery_plan(branchy, branchy)
    assert all(s.op == "copy" and s.src_runs == s.dst_runs for s in plan.steps)
    assert plan.copied_elements() == plan.total_elements() == 25


def test_renames_match_renamed_features():
    plan = surgery_plan(tiny_fc(), tiny_fc(("health", "mana")), renames={"hp": "health"})
    assert plan.copied_elements() == plan.total_elements()


def test_coverage_errors():
    shapes = {"W": (2, 2)}
    with pytest.raises(CoverageError, match=r"uncovered at \[\[2, 4\]\]"):
        check_coverage([InitStep("W", ((0, 2),))], shapes)
    with pytest.raises(CoverageError, match="more than once"):
        check_coverage([InitStep("W", ((0, 4),)), InitStep("W", ((1, 2),))], shapes)
    with pytest.raises(CoverageError, match="unknown parameter"):
        check_coverage([InitStep("V", ((0, 4),))], shapes)
    with pytest.raises(CoverageError, match="mismatched"):
        check_coverage([CopyStep("W", ((0, 3),), "W", ((0, 4),))], shapes)
    check_coverage([InitStep("W", ((0, 4),))], shapes)


def _ambiguous_graph(other_a, other_b):
    b = GraphBuilder()
    p = b.dense(b.input(["a", other_a]), "p", 2)
    q = b.op("add", b.dense(b.input([other_b]), "q", 2), p)
    s = b.param("s", (1, 4))
    return b.build([b.op("mul", b.op("concat", p, q, axis=1), s)])


def test_ambiguous_match_raises():
    old = table(_ambiguous_graph("x", "y"))
    new = table(_ambiguous_graph("u", "v"))
    with pytest.raises(AmbiguousMatchError, match="'s'"):
        diff_maps(old, new)


def test_plan_invariant_under_feature_name_permutation():
    rename = {"f1": "g9", "f2": "g1", "f3": "g5"}
    old = two_branch()
    new = two_branch(branch2=("f3", "f4"), swap=True)
    old_r = two_branch(branch1=("g9", "g1"), branch2=("g5",))
    new_r = two_branch(branch1=("g9", "g1"), branch2=("g5", "f4"), swap=True)
    a = surgery_plan(old, new)
    b = surgery_plan(old_r, new_r)
    strip = lambda plan: [(s.op, getattr(s, "src_runs", None), s.dst, s.dst_runs) for s in plan.steps]  # noqa: E731
    assert strip(a) == strip(b)
    assert rename  # names differ but steps do not


def test_plans_are_byte_stable(branchy):
    new = two_branch(branch2=("f3", "f4"), swap=True)
    texts = {serialize(surgery_plan(branchy, new, "positive_random"), "plan") for _ in range(3)}
    assert len(texts) == 1


def test_make_plan_rejects_unknown_init(tiny):
    with pytest.raises(ValueError):
        surgery_plan(tiny, tiny, init="gaussian")
