"""Canonical JSON file formats.

All writers emit sorted keys, compact separators and shortest round-trip
float text, so identical objects always serialize to identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import GraftError, ParseError
from .ir import KINDS, FeatureSchema, Graph, Node, ParamStore
from .mapping.interaction import InteractionMap, from_runs, to_runs

_ATTR_KEYS = {"concat": ("axis",), "slice": ("ranges",), "avgpool": ("window", "stride"),
              "maxpool": ("window", "stride")}


def dumps(obj) -> str:
    try:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"
    except ValueError as exc:
        raise GraftError(f"cannot serialize non-finite value: {exc}") from exc


def loads(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _require(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(f"{where}: field {key!r} must be an integer")
    if kind is not int and not isinstance(value, kind):
        raise ParseError(f"{where}: field {key!r} must be {getattr(kind, '__name__', kind)}")
    return value


def _int_list(value, where):
    if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
        raise ParseError(f"{where}: expected a list of integers")
    return value


def _runs(value, where):
    if not isinstance(value, list):
        raise ParseError(f"{where}: runs must be a list")
    out = []
    for r in value:
        r = _int_list(r, where)
        if len(r) != 2 or not 0 <= r[0] < r[1]:
            raise ParseError(f"{where}: bad run {r}")
        out.append(tuple(r))
    return tuple(out)


# graph

def graph_to_dict(graph: Graph):
    nodes = []
    for n in graph.nodes:
        d = {"id": n.id, "kind": n.kind}
        if n.inputs:
            d["inputs"] = list(n.inputs)
        if n.kind == "input":
            d["shape"] = list(n.shape)
            d["schema"] = list(n.schema.names)
        elif n.kind == "param":
            d["shape"] = list(n.shape)
            d["name"] = n.name
        for key in _ATTR_KEYS.get(n.kind, ()):
            if key in n.attrs:
                value = n.attrs[key]
                d[key] = [list(r) for r in value] if key == "ranges" else value
        nodes.append(d)
    return {"nodes": nodes, "outputs": list(graph.outputs)}


def graph_from_dict(data) -> Graph:
    from .ir import _op_shape

    nodes_data = _require(data, "nodes", list, "graph")
    outputs = _int_list(_require(data, "outputs", list, "graph"), "graph outputs")
    nodes = []
    for pos, nd in enumerate(nodes_data):
        where = f"node #{pos}"
        node_id = _require(nd, "id", int, where)
        where = f"node {node_id}"
        kind = _require(nd, "kind", str, where)
        if kind not in KINDS:
            raise ParseError(f"{where}: unknown op kind {kind!r}")
        inputs = tuple(_int_list(nd.get("inputs", []), where))
        attrs = {}
        for key in _ATTR_KEYS.get(kind, ()):
            if key in nd:
                if key == "ranges":
                    attrs[key] = tuple(tuple(_int_list(r, where)) for r in _require(nd, key, list, where))
                else:
                    attrs[key] = _require(nd, key, int, where)
        if kind == "input":
            shape = tuple(_int_list(_require(nd, "shape", list, where), where))
            schema_names = _require(nd, "schema", list, where)
            nodes.append(Node(node_id, kind, inputs, shape, schema=FeatureSchema(schema_names)))
        elif kind == "param":
            shape = tuple(_int_list(_require(nd, "shape", list, where), where))
            nodes.append(Node(node_id, kind, inputs, shape, name=_require(nd, "name", str, where)))
        else:
            if pos != node_id or any(not 0 <= i < node_id for i in inputs):
                # defer to Graph validation for the precise message
                nodes.append(Node(node_id, kind, inputs, (), attrs=attrs))
                continue
            shapes = [nodes[i].shape for i in inputs]
            shape = _op_shape(node_id, kind, attrs, shapes) if shapes else ()
            if "shape" in nd and tuple(_int_list(nd["shape"], where)) != tuple(shape):
                raise ParseError(f"{where}: declared shape {nd['shape']} disagrees with inferred {list(shape)}")
            nodes.append(Node(node_id, kind, inputs, shape, attrs=attrs))
    return Graph(nodes, tuple(outputs))


def graph_hash(graph: Graph) -> str:
    return hashlib.sha256(dumps(graph_to_dict(graph)).encode()).hexdigest()


# params

def params_to_dict(params: ParamStore):
    return {"params": {name: {"shape": list(params[name].shape), "data": params[name].ravel().tolist()}
                       for name in params}}


def params_from_dict(data) -> ParamStore:
    entries = _require(data, "params", dict, "params file")
    tensors = {}
    for name, entry in entries.items():
        where = f"param {name!r}"
        shape = tuple(_int_list(_require(entry, "shape", list, where), where))
        values = _require(entry, "data", list, where)
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
            raise ParseError(f"{where}: data must be numbers")
        if len(values) != int(np.prod(shape, dtype=np.int64)):
            raise ParseError(f"{where}: {len(values)} values for shape {list(shape)}")
        tensors[name] = np.array(values, dtype=np.float64).reshape(shape)
    return ParamStore(tensors)


# interaction maps

def imap_to_dict(imap: InteractionMap):
    return {"features": {f: [{"param": p, "runs": runs} for p, runs in imap.runs(f)] for f in imap.features},
            "order": list(imap.features)}


def imap_from_dict(data) -> InteractionMap:
    features = _require(data, "features", dict, "interaction map")
    order = data.get("order", sorted(features))
    if sorted(order) != sorted(features):
        raise ParseError("interaction map: 'order' does not list exactly the mapped features")
    coords = {}
    for f in order:
        entries = features[f]
        if not isinstance(entries, list):
            raise ParseError(f"feature {f!r}: expected a list of param entries")
        coords[f] = {}
        for e in entries:
            param = _require(e, "param", str, f"feature {f!r}")
            coords[f][param] = from_runs(_runs(_require(e, "runs", list, f"feature {f!r}"), f"feature {f!r}"))
    return InteractionMap(order, coords)


# surgery plans and diffs

def plan_to_dict(plan):
    steps = []
    for step in plan.steps:
        d = {"op": step.op, "dst": step.dst, "dst_runs": [list(r) for r in step.dst_runs]}
        if step.op == "copy":
            d.update(src=step.src, src_runs=[list(r) for r in step.src_runs])
        else:
            d["mode"] = step.mode
            if step.mode == "positive_random":
                d["seed"] = step.seed
        steps.append(d)
    return {"old_hash": plan.old_hash, "new_hash": plan.new_hash, "steps": steps}


def plan_from_dict(data):
    from .planner import CopyStep, InitStep, SurgeryPlan

    steps = []
    for i, sd in enumerate(_require(data, "steps", list, "plan")):
        where = f"plan step {i}"
        op = _require(sd, "op", str, where)
        dst = _require(sd, "dst", str, where)
        dst_runs = _runs(_require(sd, "dst_runs", list, where), where)
        if op == "copy":
            src_runs = _runs(_require(sd, "src_runs", list, where), where)
            steps.append(CopyStep(_require(sd, "src", str, where), src_runs, dst, dst_runs))
        elif op == "init":
            mode = _require(sd, "mode", str, where)
            if mode not in ("zero", "positive_random"):
                raise ParseError(f"{where}: unknown init mode {mode!r}")
            seed = _require(sd, "seed", int, where) if mode == "positive_random" else 0
            steps.append(InitStep(dst, dst_runs, mode, seed))
        else:
            raise ParseError(f"{where}: unknown op {op!r}")
    return SurgeryPlan(_require(data, "old_hash", str, "plan"), _require(data, "new_hash", str, "plan"),
                       tuple(steps))


def _block_to_dict(block):
    return {"param": block.param, "runs": [list(r) for r in block.runs]}


def _block_from_dict(d, where):
    from .planner import Block

    return Block(_require(d, "param", str, where), _runs(_require(d, "runs", list, where), where))


def diff_to_dict(diff):
    def matches(items):
        return [{"key": list(key), "old": _block_to_dict(o), "new": _block_to_dict(n)} for key, o, n in items]

    return {
        "old_hash": diff.old_hash, "new_hash": diff.new_hash,
        "kept": sorted(diff.kept), "inserted": sorted(diff.inserted), "removed": sorted(diff.removed),
        "matched": matches(diff.matched), "moved_groups": matches(diff.moved_groups),
        "retired_blocks": [_block_to_dict(b) for b in diff.retired_blocks],
        "fresh_blocks": [_block_to_dict(b) for b in diff.fresh_blocks],
        "new_param_shapes": {p: list(s) for p, s in diff.new_param_shapes.items()},
    }


def diff_from_dict(data):
    from .planner import MapDiff

    def matches(key):
        out = []
        for i, m in enumerate(_require(data, key, list, "diff")):
            where = f"diff {key}[{i}]"
            out.append((tuple(_require(m, "key", list, where)),
                        _block_from_dict(_require(m, "old", dict, where), where),
                        _block_from_dict(_require(m, "new", dict, where), where)))
        return out

    shapes = _require(data, "new_param_shapes", dict, "diff")
    return MapDiff(
        kept=frozenset(_require(data, "kept", list, "diff")),
        inserted=frozenset(_require(data, "inserted", list, "diff")),
        removed=frozenset(_require(data, "removed", list, "diff")),
        matched=matches("matched"), moved_groups=matches("moved_groups"),
        retired_blocks=[_block_from_dict(b, "diff retired") for b in _require(data, "retired_blocks", list, "diff")],
        fresh_blocks=[_block_from_dict(b, "diff fresh") for b in _require(data, "fresh_blocks", list, "diff")],
        old_hash=_require(data, "old_hash", str, "diff"), new_hash=_require(data, "new_hash", str, "diff"),
        new_param_shapes={p: tuple(_int_list(s, "diff shapes")) for p, s in shapes.items()},
    )


# generic entry points

_WRITERS = {"graph": graph_to_dict, "params": params_to_dict, "imap": imap_to_dict,
            "plan": plan_to_dict, "diff": diff_to_dict}
_READERS = {"graph": graph_from_dict, "params": params_from_dict, "imap": imap_from_dict,
            "plan": plan_from_dict, "diff": diff_from_dict}


def serialize(obj, kind) -> str:
    return dumps(_WRITERS[kind](obj))


def deserialize(text, kind):
    data = loads(text)
    if not isinstance(data, dict):
        raise ParseError(f"{kind} file: top level must be a JSON object")
    try:
        return _READERS[kind](data)
    except (TypeError, AttributeError) as exc:
        raise ParseError(f"{kind} file: {exc}") from exc


def load(path, kind):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise GraftError(f"cannot read {path}: {exc.strerror}") from exc
    return deserialize(text, kind)


def save(obj, path, kind):
    Path(path).write_text(serialize(obj, kind))


def save_json(data, path):
    Path(path).write_text(dumps(data))
