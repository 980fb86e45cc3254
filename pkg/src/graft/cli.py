"""Command-line front end.

Exit codes: 0 success, 1 user error (bad input, failed check), 2 internal error.
"""

import argparse
import csv
import io as _io
import sys
import time
from pathlib import Path

from . import io
from .errors import GraftError
from .estimators import make_mapper
from .generators import bench_graph
from .mapping import ParamAnnotations, boolean_map, gradient_map, maps_equal, oracle_map
from .planner import build_group_table, diff_maps, make_plan
from .transfer import apply_plan, verify_equivalence


class UsageError(GraftError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def format_sci(x):
    """``0.0e0``-style scientific notation with one decimal."""
    mantissa, exponent = f"{x:.1e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def _load_renames(path):
    if not path:
        return None
    data = io.loads(Path(path).read_text())
    if not isinstance(data, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in data.items()):
        raise GraftError(f"{path}: rename table must be a JSON object of old name -> new name")
    return data


def _annotations_for(graph, imap, path):
    if sorted(imap.features) != sorted(graph.feature_names):
        raise GraftError(f"{path}: map features do not match the graph's schemas")
    shapes = {n.name: n.shape for n in graph.params}
    for f in imap.features:
        for p, idx in imap[f].items():
            if p not in shapes:
                raise GraftError(f"{path}: map names unknown parameter {p!r}")
            if idx.size and idx[-1] >= graph.param_node(p).size:
                raise GraftError(f"{path}: map index out of range for {p!r}")
    ordered = type(imap)(graph.feature_names, imap.coords, shapes, canonical=True)
    return ParamAnnotations.from_interaction_map(ordered, shapes)


def cmd_map(args):
    graph = io.load(args.graph, "graph")
    imap = make_mapper(args.method, args.seed).fit(graph).interaction_map_
    io.save(imap, args.out, "imap")
    print(f"{args.method}: {imap.count()} interactions over {len(imap.features)} features")
    return 0


def cmd_check(args):
    graph = io.load(args.graph, "graph")
    _, bmap = boolean_map(graph)
    omap = oracle_map(graph)
    gmap = gradient_map(graph, seed=args.seed)
    ok = True
    for name, other in (("oracle", omap), ("gradient", gmap)):
        report = maps_equal(bmap, other)
        if not report:
            ok = False
            print(f"boolean vs {name}: {len(report.lines())} differences")
            for line in report.lines()[:20]:
                print(f"  {line}")
    if ok:
        print(f"3 methods agree: {bmap.count()} interactions")
        return 0
    return 1


def _diff(old_graph, old_ann, new_graph, new_ann, renames):
    old_table = build_group_table(old_ann, io.graph_hash(old_graph))
    new_table = build_group_table(new_ann, io.graph_hash(new_graph))
    return diff_maps(old_table, new_table, renames)


def cmd_diff(args):
    old_graph = io.load(args.old_graph, "graph")
    new_graph = io.load(args.new_graph, "graph")
    old_ann = _annotations_for(old_graph, io.load(args.old_map, "imap"), args.old_map)
    new_ann = _annotations_for(new_graph, io.load(args.new_map, "imap"), args.new_map)
    diff = _diff(old_graph, old_ann, new_graph, new_ann, _load_renames(args.renames))
    io.save(diff, args.out, "diff")
    print(diff.summary())
    return 0


def cmd_plan(args):
    plan = make_plan(io.load(args.diff, "diff"), args.init, args.seed)
    io.save(plan, args.out, "plan")
    print(f"{len(plan.steps)} steps, {plan.copied_elements()} of {plan.total_elements()} elements copied")
    return 0


def cmd_apply(args):
    plan = io.load(args.plan, "plan")
    old_params = io.load(args.old_params, "params")
    new_graph = io.load(args.new_graph, "graph")
    old_graph = io.load(args.old_graph, "graph") if args.old_graph else None
    result = apply_plan(plan, old_params, new_graph, old_graph)
    io.save(result.params, args.out, "params")
    print(f"transferred {result.transfer_pct:.2f}%")
    return 0


def cmd_surgery(args):
    old_graph = io.load(args.old_graph, "graph")
    new_graph = io.load(args.new_graph, "graph")
    old_params = io.load(args.old_params, "params")
    renames = _load_renames(args.renames)
    old_ann, _ = boolean_map(old_graph)
    new_ann, _ = boolean_map(new_graph)
    diff = _diff(old_graph, old_ann, new_graph, new_ann, renames)
    plan = make_plan(diff, args.init, args.seed)
    result = apply_plan(plan, old_params, new_graph, old_graph)
    report = verify_equivalence(old_graph, old_params, new_graph, result.params, renames,
                                n_states=args.states, seed=args.seed)
    report.transfer_pct = result.transfer_pct
    io.save(result.params, args.out, "params")
    if args.plan_out:
        io.save(plan, args.plan_out, "plan")
    if args.report:
        io.save_json(report.to_dict(), args.report)
    print(f"transferred {result.transfer_pct:.2f}%, max_abs_diff {format_sci(report.max_abs_diff)}")
    return 0


def cmd_verify(args):
    old_graph = io.load(args.old_graph, "graph")
    new_graph = io.load(args.new_graph, "graph")
    report = verify_equivalence(old_graph, io.load(args.old_params, "params"), new_graph,
                                io.load(args.new_params, "params"), _load_renames(args.renames),
                                n_states=args.states, seed=args.seed)
    if args.out:
        io.save_json(report.to_dict(), args.out)
    print(f"{report.states} states, max_abs_diff {format_sci(report.max_abs_diff)}")
    return 0


def run_bench(n_features, depth, seed=0, init="positive", safe=True):
    """Time both mappers on the bench graph. Returns ``[(method, features, wall_ms)]``."""
    graph = bench_graph(n_features, depth, seed=seed)
    t0 = time.perf_counter()
    boolean_map(graph)
    t1 = time.perf_counter()
    gradient_map(graph, seed=seed, init=init, safe=safe)
    t2 = time.perf_counter()
    return [("boolean", n_features, (t1 - t0) * 1e3), ("gradient", n_features, (t2 - t1) * 1e3)]


def cmd_bench(args):
    rows = run_bench(args.features, args.depth, args.seed, args.init, not args.unsafe)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "features", "wall_ms"])
    for method, features, ms in rows:
        writer.writerow([method, features, f"{ms:.3f}"])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


def build_parser():
    parser = _Parser(prog="graft", description="Feature-aware parameter surgery for computational graphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("map", help="compute an interaction map")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", choices=("boolean", "gradient", "oracle"), default="boolean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("check", help="run all three mappers and compare")
    p.add_argument("--graph", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("diff", help="diff two interaction maps by feature group")
    for flag in ("--old-graph", "--old-map", "--new-graph", "--new-map", "--out"):
        p.add_argument(flag, required=True)
    p.add_argument("--renames")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("plan", help="turn a diff into a surgery plan")
    p.add_argument("--diff", required=True)
    p.add_argument("--init", choices=("zero", "positive_random"), default="zero")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("apply", help="apply a surgery plan to old parameters")
    for flag in ("--plan", "--old-params", "--new-graph", "--out"):
        p.add_argument(flag, required=True)
    p.add_argument("--old-graph")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("surgery", help="map, diff, plan, apply and verify in one go")
    for flag in ("--old-graph", "--old-params", "--new-graph", "--out"):
        p.add_argument(flag, required=True)
    p.add_argument("--renames")
    p.add_argument("--init", choices=("zero", "positive_random"), default="zero")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--states", type=int, default=100)
    p.add_argument("--plan-out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_surgery)

    p = sub.add_parser("verify", help="compare old and new model outputs on random states")
    for flag in ("--old-graph", "--old-params", "--new-graph", "--new-params"):
        p.add_argument(flag, required=True)
    p.add_argument("--renames")
    p.add_argument("--states", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="time boolean against gradient mapping")
    p.add_argument("--features", type=int, default=128)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("positive", "signed"), default="positive")
    p.add_argument("--unsafe", action="store_true", help="skip the mapping-safe op substitutions")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except GraftError as exc:
        print(f"graft: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"graft: error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"graft: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
