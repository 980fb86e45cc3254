"""Boolean feature propagation: one abstract pass over the graph.

Every scalar carries a bit vector over the global feature universe (the
trailing axis of a boolean array). Inputs start as singletons. Whenever a
parameter element meets an input-derived scalar through ``+``, ``*`` or a
matmul product, the parameter's own bit vector absorbs the scalar's bits;
the result carries the input's bits. Two input-derived operands union, two
parameters yield the empty set. Activations leave sets untouched, pools and
reductions union their windows.
"""

import numpy as np

from ..ir import ACTIVATIONS, POOLS, Graph
from .interaction import ParamAnnotations


def _broadcast(feats, shape):
    return np.broadcast_to(feats, tuple(shape) + feats.shape[-1:])


def _reduce_to(feats, shape):
    """Union a broadcast bit array back down to an operand shape."""
    if feats.shape[:-1] == tuple(shape):
        return feats
    return feats.any(axis=0).reshape(tuple(shape) + feats.shape[-1:])


def propagate(graph: Graph):
    """Run the set pass. Returns ``(node feature arrays, ParamAnnotations)``."""
    features = graph.feature_names
    width = len(features)
    feats = {}
    masks = {}
    for node in graph.nodes:
        if node.kind == "input":
            f = np.zeros(node.shape + (width,), dtype=bool)
            offset = features.index(node.schema.names[0])
            f[0, np.arange(node.shape[1]), offset + np.arange(node.shape[1])] = True
            feats[node.id] = f
            continue
        if node.kind == "param":
            masks[node.name] = np.zeros(node.shape + (width,), dtype=bool)
            feats[node.id] = np.zeros(node.shape + (width,), dtype=bool)
            continue
        args = [feats[i] for i in node.inputs]
        operands = [graph[i] for i in node.inputs]
        kind = node.kind
        if kind == "matmul":
            fa, fb = args
            out = fa.any(axis=1)[:, None, :] | fb.any(axis=0)[None, :, :]
            if operands[0].kind == "param":
                masks[operands[0].name] |= fb.any(axis=1)[None, :, :]
            if operands[1].kind == "param":
                masks[operands[1].name] |= fa.any(axis=0)[:, None, :]
        elif kind in ("add", "mul"):
            fa, fb = (_broadcast(a, node.shape) for a in args)
            out = fa | fb
            for op_node, other in ((operands[0], fb), (operands[1], fa)):
                if op_node.kind == "param":
                    masks[op_node.name] |= _reduce_to(other, op_node.shape)
        elif kind == "concat":
            out = np.concatenate(args, axis=node.attrs.get("axis", len(node.shape) - 1))
        elif kind == "slice":
            out = args[0][tuple(slice(lo, hi) for lo, hi in node.attrs["ranges"])]
        elif kind in ACTIVATIONS:
            out = args[0]
        elif kind in POOLS:
            x = args[0]
            window, stride = node.attrs["window"], node.attrs["stride"]
            out = np.stack([x[:, s:s + window].any(axis=1) for s in range(0, node.shape[1] * stride, stride)],
                           axis=1)
        elif kind == "sum":
            out = args[0].reshape(-1, width).any(axis=0)
        else:
            raise AssertionError(kind)
        feats[node.id] = np.ascontiguousarray(out)
    return feats, ParamAnnotations(features, masks)


def boolean_map(graph: Graph):
    """``(ParamAnnotations, InteractionMap)`` from the set pass. Never reads params."""
    _, annotations = propagate(graph)
    return annotations, annotations.to_interaction_map()
