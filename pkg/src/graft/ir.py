"""Computational-graph IR: nodes, feature schemas, shape inference, params.

Graphs are immutable and topologically ordered by construction: a node may
only consume nodes with a smaller id. Activations have a fixed batch of one,
so every non-parameter tensor is ``[1, n]`` or a scalar ``[]``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, Sequence

import numpy as np

from .errors import ShapeError, ValidationError

OP_KINDS = (
    "matmul", "add", "mul", "concat", "slice",
    "sigmoid", "tanh", "relu", "avgpool", "maxpool", "sum",
)
KINDS = ("input", "param") + OP_KINDS
ACTIVATIONS = ("sigmoid", "tanh", "relu")
POOLS = ("avgpool", "maxpool")
ARITY = {"matmul": 2, "add": 2, "mul": 2, "slice": 1, "sum": 1,
         **{k: 1 for k in ACTIVATIONS + POOLS}}

Shape = tuple


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names of one input tensor; position is the index."""

    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        seen = set()
        for name in self.names:
            if not isinstance(name, str) or not name:
                raise ValidationError(f"feature names must be non-empty strings, got {name!r}")
            if name in seen:
                raise ValidationError(f"duplicate feature name {name!r} in schema")
            seen.add(name)

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def index(self, name):
        return self.names.index(name)

    @property
    def entries(self):
        return [(name, i) for i, name in enumerate(self.names)]


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    inputs: tuple = ()
    shape: Shape = ()
    name: str | None = None
    schema: FeatureSchema | None = None
    attrs: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "shape", tuple(self.shape))
        object.__setattr__(self, "attrs", MappingProxyType(dict(self.attrs)))

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        return (self.id, self.kind, self.inputs, self.shape, self.name, self.schema,
                dict(self.attrs)) == (other.id, other.kind, other.inputs, other.shape,
                                      other.name, other.schema, dict(other.attrs))

    def __hash__(self):
        return hash((self.id, self.kind, self.inputs, self.shape, self.name))

    @property
    def size(self):
        return int(np.prod(self.shape, dtype=np.int64))


def _broadcast_shape(node_id, a, b):
    if a == b:
        return a
    # tensor plus row vector, either order
    for big, small in ((a, b), (b, a)):
        if len(big) == 2 and small in ((big[1],), (1, big[1])):
            return big
    raise ShapeError(node_id, "operands are neither equal-shaped nor tensor plus row vector", (a, b))


def _op_shape(node_id, kind, attrs, shapes):
    """Output shape of one op given operand shapes."""
    if kind == "matmul":
        a, b = shapes
        if len(a) != 2 or len(b) != 2 or a[1] != b[0]:
            raise ShapeError(node_id, "matmul needs [P,N] x [N,M]", (a, b))
        return (a[0], b[1])
    if kind in ("add", "mul"):
        return _broadcast_shape(node_id, *shapes)
    if kind == "concat":
        rank = len(shapes[0])
        axis = attrs.get("axis", rank - 1)
        if rank == 0 or any(len(s) != rank for s in shapes) or not 0 <= axis < rank:
            raise ShapeError(node_id, f"concat along axis {axis} needs equal non-zero ranks", shapes)
        for s in shapes[1:]:
            if any(s[d] != shapes[0][d] for d in range(rank) if d != axis):
                raise ShapeError(node_id, "concat operands differ off the concat axis", (shapes[0], s))
        out = list(shapes[0])
        out[axis] = sum(s[axis] for s in shapes)
        return tuple(out)
    if kind == "slice":
        (a,) = shapes
        ranges = attrs.get("ranges")
        if ranges is None or len(ranges) != len(a):
            raise ShapeError(node_id, "slice needs one [begin,end) range per dimension", (a,))
        out = []
        for (lo, hi), dim in zip(ranges, a):
            if not 0 <= lo < hi <= dim:
                raise ShapeError(node_id, f"slice range [{lo},{hi}) outside dimension {dim}", (a,))
            out.append(hi - lo)
        return tuple(out)
    if kind in ACTIVATIONS:
        return shapes[0]
    if kind in POOLS:
        (a,) = shapes
        window, stride = attrs.get("window"), attrs.get("stride")
        if len(a) != 2 or not isinstance(window, int) or not isinstance(stride, int):
            raise ShapeError(node_id, "pool needs a rank-2 operand and integer window/stride", (a,))
        if window < 1 or stride < 1 or window > a[1]:
            raise ShapeError(node_id, f"pool window {window} stride {stride} invalid for width {a[1]}", (a,))
        return (a[0], (a[1] - window) // stride + 1)
    if kind == "sum":
        return ()
    raise ValidationError(f"node {node_id}: unknown op kind {kind!r}")


def infer_shapes(nodes: Sequence[Node]) -> dict:
    """Map node id to shape for a topologically ordered node list.

    Leaf shapes are taken as given; op shapes are derived from their operands.
    """
    shapes = {}
    for node in nodes:
        if node.kind in ("input", "param"):
            shapes[node.id] = tuple(node.shape)
            continue
        shapes[node.id] = _op_shape(node.id, node.kind, node.attrs, [shapes[i] for i in node.inputs])
    return shapes


@dataclass(frozen=True, eq=False)
class Graph:
    """Validated, immutable computational graph.

    ``nodes[i].id == i`` always holds, so ids double as list positions.
    """

    nodes: tuple
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        _validate(self)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.nodes == other.nodes and self.outputs == other.outputs

    def __hash__(self):
        return hash((self.nodes, self.outputs))

    def __len__(self):
        return len(self.nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes)

    def __getitem__(self, node_id) -> Node:
        return self.nodes[node_id]

    @property
    def inputs(self):
        return [n for n in self.nodes if n.kind == "input"]

    @property
    def params(self):
        return [n for n in self.nodes if n.kind == "param"]

    @property
    def schemas(self):
        return {n.id: n.schema for n in self.inputs}

    @property
    def shapes(self):
        return {n.id: n.shape for n in self.nodes}

    @property
    def feature_names(self):
        """Global feature universe: schemas concatenated in input-id order."""
        return [name for n in self.inputs for name in n.schema]

    def feature_positions(self):
        """Feature name -> (input node id, index within that input)."""
        return {name: (n.id, i) for n in self.inputs for i, name in enumerate(n.schema)}

    def param_node(self, name):
        for n in self.params:
            if n.name == name:
                return n
        raise KeyError(name)

    def consumers(self):
        """Node id -> list of (consumer id, operand position)."""
        out = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for pos, i in enumerate(n.inputs):
                out[i].append((n.id, pos))
        return out

    def ancestors_with_input(self):
        """Set of node ids that depend on at least one input node."""
        live = set()
        for n in self.nodes:
            if n.kind == "input" or any(i in live for i in n.inputs):
                live.add(n.id)
        return live

    def replace_kinds(self, mapping):
        """Copy of the graph with op kinds substituted per ``mapping``."""
        nodes = [Node(n.id, mapping.get(n.kind, n.kind), n.inputs, n.shape, n.name, n.schema, n.attrs)
                 for n in self.nodes]
        return Graph(nodes, self.outputs)


def _validate(graph):
    names = {}
    features = {}
    for pos, node in enumerate(graph.nodes):
        if node.id != pos:
            raise ValidationError(f"node ids must be 0..n-1 in order; position {pos} has id {node.id}")
        if node.kind not in KINDS:
            raise ValidationError(f"node {node.id}: unknown op kind {node.kind!r}")
        for i in node.inputs:
            if not isinstance(i, int) or not 0 <= i < node.id:
                raise ValidationError(f"node {node.id}: input {i!r} does not reference an earlier node")
        if len(node.shape) > 2:
            raise ShapeError(node.id, "rank above 2 is not supported", (node.shape,))
        if node.kind == "input":
            if node.inputs:
                raise ValidationError(f"node {node.id}: input nodes take no operands")
            if node.schema is None or not len(node.schema):
                raise ValidationError(f"node {node.id}: input node without a feature schema")
            if len(node.shape) != 2 or node.shape[0] != 1 or node.shape[1] != len(node.schema):
                raise ShapeError(node.id, f"input must be [1,{len(node.schema)}] to match its schema",
                                 (node.shape,))
            for name in node.schema:
                if name in features:
                    raise ValidationError(
                        f"node {node.id}: feature {name!r} already declared by node {features[name]}")
                features[name] = node.id
            continue
        if node.schema is not None:
            raise ValidationError(f"node {node.id}: only input nodes carry a schema")
        if node.kind == "param":
            if node.inputs:
                raise ValidationError(f"node {node.id}: param nodes take no operands")
            if not node.name:
                raise ValidationError(f"node {node.id}: param node without a name")
            if node.name in names:
                raise ValidationError(f"node {node.id}: param name {node.name!r} reused from node {names[node.name]}")
            if any((not isinstance(d, int)) or d < 1 for d in node.shape):
                raise ShapeError(node.id, "param dimensions must be positive integers", (node.shape,))
            names[node.name] = node.id
            continue
        arity = ARITY.get(node.kind)
        if arity is not None and len(node.inputs) != arity:
            raise ValidationError(f"node {node.id}: {node.kind} takes {arity} operand(s), got {len(node.inputs)}")
        if node.kind == "concat" and len(node.inputs) < 1:
            raise ValidationError(f"node {node.id}: concat needs at least one operand")
        expected = _op_shape(node.id, node.kind, node.attrs, [graph.nodes[i].shape for i in node.inputs])
        if tuple(node.shape) != expected:
            raise ShapeError(node.id, f"declared shape disagrees with inferred {list(expected)}", (node.shape,))
    if not graph.outputs:
        raise ValidationError("graph declares no outputs")
    for o in graph.outputs:
        if not isinstance(o, int) or not 0 <= o < len(graph.nodes):
            raise ValidationError(f"output {o!r} is not a node id")


class GraphBuilder:
    """Incremental constructor; shapes of op nodes are inferred on the fly.

    >>> b = GraphBuilder()
    >>> x = b.input(["hp", "mana"])
    >>> w = b.param("W", [2, 2])
    >>> y = b.op("matmul", x, w)
    >>> b.build([y]).nodes[y].shape
    (1, 2)
    """

    def __init__(self):
        self._nodes = []

    def _add(self, kind, inputs=(), shape=(), name=None, schema=None, attrs=None):
        node_id = len(self._nodes)
        attrs = dict(attrs or {})
        if kind not in ("input", "param"):
            shape = _op_shape(node_id, kind, attrs, [self._nodes[i].shape for i in inputs])
        self._nodes.append(Node(node_id, kind, inputs, shape, name, schema, attrs))
        return node_id

    def input(self, features):
        schema = FeatureSchema(features)
        return self._add("input", shape=(1, len(schema)), schema=schema)

    def param(self, name, shape):
        return self._add("param", shape=tuple(shape), name=name)

    def op(self, kind, *inputs, **attrs):
        if kind == "slice" and "ranges" in attrs:
            attrs["ranges"] = tuple(tuple(r) for r in attrs["ranges"])
        return self._add(kind, inputs, attrs=attrs)

    def dense(self, x, name, width, activation="tanh", bias=True):
        """``activation(x @ W + b)`` with params ``W_<name>`` and ``b_<name>``."""
        fan_in = self._nodes[x].shape[-1]
        h = self.op("matmul", x, self.param(f"W_{name}", (fan_in, width)))
        if bias:
            h = self.op("add", h, self.param(f"b_{name}", (width,)))
        return self.op(activation, h) if activation else h

    def shape(self, node_id):
        return self._nodes[node_id].shape

    def build(self, outputs):
        return Graph(self._nodes, tuple(outputs))


class ParamStore(Mapping):
    """Named float64 tensors. Equality is bit-exact."""

    def __init__(self, tensors=None):
        self._tensors = {}
        for name, value in (tensors or {}).items():
            arr = np.array(value, dtype=np.float64)
            arr.setflags(write=False)
            self._tensors[name] = arr

    def __getitem__(self, name):
        return self._tensors[name]

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self):
        return len(self._tensors)

    def __eq__(self, other):
        if not isinstance(other, ParamStore):
            return NotImplemented
        if sorted(self) != sorted(other):
            return False
        return all(self[k].shape == other[k].shape and self[k].tobytes() == other[k].tobytes() for k in self)

    def __repr__(self):
        inner = ", ".join(f"{k}: {list(v.shape)}" for k, v in self._tensors.items())
        return f"ParamStore({{{inner}}})"

    def total_size(self):
        return sum(v.size for v in self._tensors.values())
