"""Input checks shared by the estimators, engine and CLI."""

import numpy as np

from .errors import NumericError, ShapeError, ValidationError
from .ir import Graph, ParamStore


def check_graph(graph):
    if not isinstance(graph, Graph):
        raise ValidationError(f"expected a Graph, got {type(graph).__name__}")
    return graph


def check_params(graph, params):
    """Every param node has exactly one finite tensor of matching shape."""
    if not isinstance(params, ParamStore):
        params = ParamStore(params)
    wanted = {n.name: n for n in graph.params}
    missing = sorted(set(wanted) - set(params))
    if missing:
        raise ValidationError(f"missing parameter tensors: {', '.join(missing)}")
    extra = sorted(set(params) - set(wanted))
    if extra:
        raise ValidationError(f"parameter tensors not in graph: {', '.join(extra)}")
    for name, node in wanted.items():
        if params[name].shape != node.shape:
            raise ShapeError(node.id, f"param {name!r} has the wrong shape", (node.shape, params[name].shape))
        if not np.all(np.isfinite(params[name])):
            raise NumericError(f"param {name!r} contains NaN or Inf")
    return params


def check_inputs(graph, inputs):
    """Normalize ``{input id: array}`` to float64 arrays of the declared shapes."""
    out = {}
    for node in graph.inputs:
        if node.id not in inputs:
            raise ValidationError(f"no value for input node {node.id}")
        arr = np.asarray(inputs[node.id], dtype=np.float64)
        if arr.shape != node.shape:
            arr = arr.reshape(node.shape) if arr.size == node.size else arr
        if arr.shape != node.shape:
            raise ShapeError(node.id, "input value has the wrong shape", (node.shape, arr.shape))
        if np.isnan(arr).any():
            raise NumericError(f"input node {node.id} contains NaN")
        out[node.id] = arr
    return out


def encode_features(graph, values, default=0.0):
    """Build graph inputs from a ``{feature name: value}`` dict."""
    inputs = {}
    for node in graph.inputs:
        arr = np.full(node.shape, default, dtype=np.float64)
        for i, name in enumerate(node.schema):
            if name in values:
                arr[0, i] = values[name]
        inputs[node.id] = arr
    return inputs
