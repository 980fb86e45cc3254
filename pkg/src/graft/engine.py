"""Forward evaluation, reverse-mode gradients and mapping-safe transforms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .ir import POOLS, Graph, ParamStore
from .validation import check_inputs, check_params

SAFE_SUBSTITUTIONS = {"maxpool": "avgpool", "sigmoid": "tanh"}


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _windows(width, window, stride):
    return [(s, s + window) for s in range(0, width - window + 1, stride)]


def param_roles(graph):
    """Classify each param as ``"additive"`` (consumed only by add) or not.

    Also returns the fan-in: the contracted dimension for a param used as the
    right operand of a matmul, the column count for a left operand, else 1.
    """
    consumers = graph.consumers()
    roles, fan_in = {}, {}
    for node in graph.params:
        uses = [(graph[c].kind, pos) for c, pos in consumers[node.id]]
        roles[node.name] = "additive" if uses and all(k == "add" for k, _ in uses) else "multiplicative"
        fan = 1
        for kind, pos in uses:
            if kind == "matmul":
                fan = max(fan, node.shape[0] if pos == 1 else node.shape[-1])
        fan_in[node.name] = fan
    return roles, fan_in


def init_params(graph: Graph, mode="positive", seed=0) -> ParamStore:
    """Random parameters for mapping (``positive``) or as an unsafe control (``signed``).

    ``positive`` draws non-bias weights from U[0.1, 1.0] / fan-in and sets
    additive parameters to exactly zero. ``signed`` draws every parameter
    from U[-1, 1] / fan-in.
    """
    if mode not in ("positive", "signed"):
        raise ValueError(f"unknown init mode {mode!r}")
    rng = np.random.default_rng(seed)
    roles, fan_in = param_roles(graph)
    tensors = {}
    for node in graph.params:
        if mode == "positive":
            values = rng.uniform(0.1, 1.0, size=node.shape) / fan_in[node.name]
            if roles[node.name] == "additive":
                values = np.zeros(node.shape)
        else:
            values = rng.uniform(-1.0, 1.0, size=node.shape) / fan_in[node.name]
        tensors[node.name] = values
    return ParamStore(tensors)


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    reduced = grad.sum(axis=0)
    return reduced.reshape(shape)


@dataclass
class Tape:
    """Per-node values of one forward pass, kept for the backward pass."""

    values: dict

    def __getitem__(self, node_id):
        return self.values[node_id]


def _eval(node, args):
    kind = node.kind
    if kind == "matmul":
        return args[0] @ args[1]
    if kind == "add":
        return args[0] + args[1]
    if kind == "mul":
        return args[0] * args[1]
    if kind == "concat":
        return np.concatenate(args, axis=node.attrs.get("axis", args[0].ndim - 1))
    if kind == "slice":
        return args[0][tuple(slice(lo, hi) for lo, hi in node.attrs["ranges"])].copy()
    if kind == "sigmoid":
        return _sigmoid(args[0])
    if kind == "tanh":
        return np.tanh(args[0])
    if kind == "relu":
        return np.maximum(args[0], 0.0)
    if kind in POOLS:
        x = args[0]
        reduce = np.mean if kind == "avgpool" else np.max
        cols = [reduce(x[:, lo:hi], axis=1) for lo, hi in
                _windows(x.shape[1], node.attrs["window"], node.attrs["stride"])]
        return np.stack(cols, axis=1)
    if kind == "sum":
        return np.asarray(args[0].sum())
    raise AssertionError(kind)


def forward(graph: Graph, params, inputs, check=True):
    """Evaluate the graph. Returns ``(list of output arrays, Tape)``."""
    if check:
        params = check_params(graph, params)
        inputs = check_inputs(graph, inputs)
    values = {}
    for node in graph.nodes:
        if node.kind == "input":
            values[node.id] = inputs[node.id]
        elif node.kind == "param":
            values[node.id] = params[node.name]
        else:
            values[node.id] = _eval(node, [values[i] for i in node.inputs])
    outputs = [values[o] for o in graph.outputs]
    return outputs, Tape(values)


def _backprop(node, grad, args, out):
    """Gradients with respect to each operand of ``node``."""
    kind = node.kind
    if kind == "matmul":
        a, b = args
        return [grad @ b.T, a.T @ grad]
    if kind == "add":
        return [_unbroadcast(grad, args[0].shape), _unbroadcast(grad, args[1].shape)]
    if kind == "mul":
        a, b = args
        return [_unbroadcast(grad * b, a.shape), _unbroadcast(grad * a, b.shape)]
    if kind == "concat":
        axis = node.attrs.get("axis", args[0].ndim - 1)
        cuts = np.cumsum([a.shape[axis] for a in args])[:-1]
        return np.split(grad, cuts, axis=axis)
    if kind == "slice":
        g = np.zeros_like(args[0])
        g[tuple(slice(lo, hi) for lo, hi in node.attrs["ranges"])] = grad
        return [g]
    if kind == "sigmoid":
        return [grad * out * (1.0 - out)]
    if kind == "tanh":
        return [grad * (1.0 - out * out)]
    if kind == "relu":
        return [grad * (args[0] > 0.0)]
    if kind in POOLS:
        x = args[0]
        g = np.zeros_like(x)
        windows = _windows(x.shape[1], node.attrs["window"], node.attrs["stride"])
        for j, (lo, hi) in enumerate(windows):
            if kind == "avgpool":
                g[:, lo:hi] += grad[:, j:j + 1] / (hi - lo)
            else:
                # ties go to the first maximum
                arg = lo + np.argmax(x[:, lo:hi], axis=1)
                g[np.arange(x.shape[0]), arg] += grad[:, j]
        return [g]
    if kind == "sum":
        return [np.full(args[0].shape, float(grad))]
    raise AssertionError(kind)


def backward(graph: Graph, params, inputs, tape=None, return_inputs=False):
    """Exact gradients of ``C = sum of every output element`` w.r.t. each param.

    Returns a dict ``param name -> gradient``; with ``return_inputs`` also a
    dict ``input id -> gradient``.
    """
    if tape is None:
        _, tape = forward(graph, params, inputs)
    grads = {}
    for o in graph.outputs:
        grads[o] = grads.get(o, 0.0) + np.ones_like(tape[o])
    for node in reversed(graph.nodes):
        if node.id not in grads or node.kind in ("input", "param"):
            continue
        args = [tape[i] for i in node.inputs]
        for i, g in zip(node.inputs, _backprop(node, grads[node.id], args, tape[node.id])):
            grads[i] = grads[i] + g if i in grads else g
    result = {}
    for node in graph.params:
        g = np.asarray(grads.get(node.id, np.zeros(node.shape)), dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise NumericError(f"gradient of {node.name!r} is not finite")
        result[node.name] = g
    if return_inputs:
        return result, {n.id: grads.get(n.id, np.zeros(n.shape)) for n in graph.inputs}
    return result


def mapping_safe_transform(graph: Graph):
    """Replace zero-gradient and non-zero-preserving ops for gradient mapping.

    Every maxpool becomes an avgpool and every sigmoid a tanh. Returns the new
    graph and a list of ``(node id, old kind, new kind)``.
    """
    report = [(n.id, n.kind, SAFE_SUBSTITUTIONS[n.kind]) for n in graph.nodes if n.kind in SAFE_SUBSTITUTIONS]
    if not report:
        return graph, []
    return graph.replace_kinds(SAFE_SUBSTITUTIONS), report
