"""Gradient probing: one one-hot forward/backward pass per input feature."""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..engine import backward, forward, init_params, mapping_safe_transform, param_roles
from ..errors import NumericError
from ..validation import check_params
from .interaction import InteractionMap

THRESHOLD = 1e-9


def default_threads():
    try:
        return max(1, int(os.environ.get("GRAFT_THREADS", "1")))
    except ValueError:
        return 1


def _additive_uses(graph, roles):
    """For each additive param, the (add node, other operand) pairs it takes part in.

    Operands with no input ancestor are skipped: adding two constants is not an
    interaction.
    """
    live = graph.ancestors_with_input()
    uses = {}
    for node in graph.nodes:
        if node.kind != "add":
            continue
        a, b = (graph[i] for i in node.inputs)
        for p, other in ((a, b), (b, a)):
            if p.kind == "param" and roles[p.name] == "additive" and other.id in live:
                uses.setdefault(p.name, []).append((node.id, other.id))
    return uses


def _probe(graph, params, position, additive, threshold):
    inputs = {n.id: np.zeros(n.shape) for n in graph.inputs}
    node_id, index = position
    inputs[node_id][0, index] = 1.0
    _, tape = forward(graph, params, inputs, check=False)
    grads = backward(graph, params, inputs, tape=tape)
    hits = {}
    for name, g in grads.items():
        if name in additive:
            continue
        if not np.all(np.isfinite(g)):
            raise NumericError(f"probe produced a non-finite gradient for {name!r}")
        idx = np.flatnonzero(np.abs(g) > threshold).astype(np.int64)
        if idx.size:
            hits[name] = idx
    for name, uses in additive.items():
        shape = graph.param_node(name).shape
        hit = np.zeros(shape, dtype=bool)
        for _, other in uses:
            x = tape[other]
            if not np.all(np.isfinite(x)):
                raise NumericError(f"probe produced a non-finite activation at node {other}")
            active = np.abs(x) > threshold
            hit |= active if active.shape == shape else active.any(axis=0).reshape(shape)
        idx = np.flatnonzero(hit).astype(np.int64)
        if idx.size:
            hits[name] = idx
    return hits


def gradient_map(graph, seed=0, init="positive", safe=True, params=None,
                 threshold=THRESHOLD, n_threads=None):
    """Interaction map from nonzero gradients under one-hot probes.

    In the default safe configuration the graph goes through
    ``mapping_safe_transform`` and receives positive parameters with zero
    biases. ``safe=False`` with ``init="signed"`` (or hand-set ``params``)
    reproduces the masking failure modes.
    """
    if safe:
        graph, _ = mapping_safe_transform(graph)
    params = init_params(graph, init, seed) if params is None else check_params(graph, params)
    roles, _ = param_roles(graph)
    additive = _additive_uses(graph, roles)
    # params consumed only by add but never next to an input-derived operand
    for name, role in roles.items():
        if role == "additive":
            additive.setdefault(name, [])
    positions = graph.feature_positions()
    features = graph.feature_names
    n_threads = n_threads or default_threads()

    def run(feature):
        return _probe(graph, params, positions[feature], additive, threshold)

    if n_threads > 1 and len(features) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(run, features))
    else:
        results = [run(f) for f in features]
    shapes = {n.name: n.shape for n in graph.params}
    return InteractionMap(features, dict(zip(features, results)), shapes, canonical=True)
