"""Brute-force reference mapper over the scalar expansion of a graph.

Kept deliberately naive and free of numpy: every scalar is a vertex, every
scalar operand an edge, labels are plain ``set`` objects and scalars are
settled in Kahn order off an explicit worklist. It exists to cross-check
the bitset engine, so it shares none of its code.
"""

from collections import deque

from ..errors import ResourceError
from .interaction import InteractionMap

MAX_SCALAR_EDGES = 10**6


def _size(shape):
    n = 1
    for d in shape:
        n *= d
    return n


def _flat(index, shape):
    flat = 0
    for i, d in zip(index, shape):
        flat = flat * d + i
    return flat


def _unflat(flat, shape):
    index = []
    for d in reversed(shape):
        index.append(flat % d)
        flat //= d
    return tuple(reversed(index))


def count_scalar_edges(graph):
    total = 0
    for node in graph.nodes:
        if node.kind in ("input", "param"):
            continue
        shapes = [graph[i].shape for i in node.inputs]
        if node.kind == "matmul":
            total += 2 * _size(node.shape) * shapes[0][1]
        elif node.kind in ("add", "mul"):
            total += 2 * _size(node.shape)
        elif node.kind in ("avgpool", "maxpool"):
            total += _size(node.shape) * node.attrs["window"]
        elif node.kind == "sum":
            total += _size(shapes[0])
        else:
            total += _size(node.shape)
    return total


def _terms(graph, node):
    """For each output scalar, a list of terms; a term is a tuple of operand scalars."""
    out_shape = node.shape
    ops = [graph[i] for i in node.inputs]
    terms = []
    for flat in range(_size(out_shape)):
        idx = _unflat(flat, out_shape)
        if node.kind == "matmul":
            a, b = ops
            p, m = idx
            row = []
            for n in range(a.shape[1]):
                row.append(((a.id, _flat((p, n), a.shape)), (b.id, _flat((n, m), b.shape))))
            terms.append(row)
        elif node.kind in ("add", "mul"):
            pair = []
            for op in ops:
                if op.shape == out_shape:
                    pair.append((op.id, flat))
                else:
                    # row vector broadcast: only the column matters
                    pair.append((op.id, idx[-1]))
            terms.append([tuple(pair)])
        elif node.kind == "concat":
            axis = node.attrs.get("axis", len(out_shape) - 1)
            offset = idx[axis]
            for op in ops:
                if offset < op.shape[axis]:
                    src = list(idx)
                    src[axis] = offset
                    terms.append([((op.id, _flat(src, op.shape)),)])
                    break
                offset -= op.shape[axis]
        elif node.kind == "slice":
            src = tuple(i + lo for i, (lo, _) in zip(idx, node.attrs["ranges"]))
            terms.append([((ops[0].id, _flat(src, ops[0].shape)),)])
        elif node.kind in ("avgpool", "maxpool"):
            r, c = idx
            start = c * node.attrs["stride"]
            terms.append([((ops[0].id, _flat((r, j), ops[0].shape)),)
                          for j in range(start, start + node.attrs["window"])])
        elif node.kind == "sum":
            terms.append([((ops[0].id, j),) for j in range(_size(ops[0].shape))])
        else:
            terms.append([((ops[0].id, flat),)])
    return terms


def oracle_map(graph, max_scalar_edges=MAX_SCALAR_EDGES):
    """Reference interaction map. Refuses graphs above ``max_scalar_edges``."""
    edges = count_scalar_edges(graph)
    if edges > max_scalar_edges:
        raise ResourceError(f"graph expands to {edges} scalar edges, above the limit of {max_scalar_edges}")

    param_of = {n.id: n.name for n in graph.params}
    succ = {}
    indegree = {}
    rules = {}
    labels = {}
    ready = deque()

    for node in graph.nodes:
        if node.kind == "input":
            for j, name in enumerate(node.schema.names):
                labels[(node.id, j)] = {name}
                ready.append((node.id, j))
            continue
        if node.kind == "param":
            for j in range(_size(node.shape)):
                labels[(node.id, j)] = set()
                ready.append((node.id, j))
            continue
        for flat, row in enumerate(_terms(graph, node)):
            scalar = (node.id, flat)
            rules[scalar] = row
            preds = {s for term in row for s in term}
            indegree[scalar] = len(preds)
            for s in preds:
                succ.setdefault(s, []).append(scalar)

    annotations = {}
    while ready:
        scalar = ready.popleft()
        if scalar in rules:
            label = set()
            for term in rules[scalar]:
                if len(term) == 1:
                    label |= labels[term[0]]
                    continue
                for mine, other in ((term[0], term[1]), (term[1], term[0])):
                    if mine[0] in param_of and labels[other]:
                        key = (param_of[mine[0]], mine[1])
                        annotations.setdefault(key, set()).update(labels[other])
                label |= labels[term[0]] | labels[term[1]]
            labels[scalar] = label
        for nxt in succ.get(scalar, ()):
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)

    features = graph.feature_names
    coords = {f: {} for f in features}
    for (param, index), names in annotations.items():
        for f in names:
            coords[f].setdefault(param, []).append(index)
    shapes = {n.name: n.shape for n in graph.params}
    return InteractionMap(features, coords, shapes)
