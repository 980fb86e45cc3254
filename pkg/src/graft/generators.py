"""Fixture graphs, random graph generation and benchmark graphs."""

import numpy as np

from .ir import GraphBuilder, ParamStore


def tiny_fc(features=("hp", "mana"), activation="sigmoid", width=2):
    """``Y = activation(X @ W + b)`` with params named ``W`` and ``b``."""
    b = GraphBuilder()
    x = b.input(features)
    h = b.op("matmul", x, b.param("W", (len(features), width)))
    h = b.op("add", h, b.param("b", (width,)))
    return b.build([b.op(activation, h)])


def two_branch(branch1=("f1", "f2"), branch2=("f3",), hidden=(2, 2), width=3, swap=False):
    """Two inputs through separate dense layers, concatenated into a deep dense layer.

    ``swap`` reverses the concat order, shifting the deep layer's row groups.
    """
    b = GraphBuilder()
    hs = []
    for k, (feats, w) in enumerate(zip((branch1, branch2), hidden), start=1):
        x = b.input(feats)
        h = b.op("matmul", x, b.param(f"W{k}", (len(feats), w)))
        h = b.op("add", h, b.param(f"b{k}", (w,)))
        hs.append(b.op("tanh", h))
    cat = b.op("concat", *(hs[::-1] if swap else hs), axis=1)
    h = b.op("matmul", cat, b.param("W3", (sum(hidden), width)))
    h = b.op("add", h, b.param("b3", (width,)))
    return b.build([b.op("tanh", h)])


def _dense(builder, x, counter, width, activation):
    counter[0] += 1
    return builder.dense(x, str(counter[0]), width, activation)


def random_graph(seed, n_features=None, n_layers=None, max_width=8):
    """Random well-formed graph in the family the cross-method suites use.

    Draws 2-64 features split over 1-3 inputs, a first dense layer per input
    and 1-3 further stages mixing dense layers, concat, slice pairs, pools,
    element-wise parameter scaling, branch sums and at most one product of a
    value with a function of itself. Every value reaches an output and
    products of inputs always share one feature set.
    """
    rng = np.random.default_rng(seed)
    n_features = int(rng.integers(2, 65)) if n_features is None else n_features
    n_layers = int(rng.integers(2, 5)) if n_layers is None else n_layers
    names = [f"f{i}" for i in range(n_features)]
    n_inputs = int(rng.integers(1, min(3, n_features) + 1))
    cuts = sorted(rng.choice(np.arange(1, n_features), size=n_inputs - 1, replace=False).tolist())
    groups = np.split(np.array(names), cuts)

    b = GraphBuilder()
    counter = [0]
    acts = ("tanh", "sigmoid", "relu")

    def act():
        return acts[int(rng.integers(len(acts)))]

    def width_of(node):
        return b.shape(node)[-1]

    branches = []
    for group in groups:
        x = b.input(list(group))
        branches.append(_dense(b, x, counter, int(rng.integers(2, max_width + 1)), act()))

    squared = False
    for _ in range(n_layers - 1):
        if len(branches) > 1 and rng.random() < 0.4:
            if rng.random() < 0.5:
                branches = [b.op("concat", *branches, axis=1)]
            else:
                # align two branches and add them element-wise
                w = int(rng.integers(2, max_width + 1))
                i, j = sorted(rng.choice(len(branches), size=2, replace=False).tolist())
                left = _dense(b, branches[i], counter, w, act())
                right = _dense(b, branches[j], counter, w, act())
                merged = b.op("add", left, right)
                branches = [h for k, h in enumerate(branches) if k not in (i, j)] + [merged]
        nxt = []
        for h in branches:
            choice = rng.choice(["dense", "dense", "pool", "scale", "square", "split"])
            w = width_of(h)
            if choice == "pool" and w >= 2:
                window = int(rng.integers(1, min(3, w) + 1))
                stride = window if (w - window) % window == 0 else 1
                kind = "maxpool" if rng.random() < 0.5 else "avgpool"
                nxt.append(b.op(kind, h, window=window, stride=stride))
            elif choice == "scale":
                counter[0] += 1
                s = b.op("mul", h, b.param(f"s_{counter[0]}", (w,)))
                nxt.append(b.op(act(), s))
            elif choice == "square" and not squared:
                squared = True
                nxt.append(b.op("mul", h, b.op("tanh", h)))
            elif choice == "split" and w >= 2:
                k = int(rng.integers(1, w))
                nxt.append(b.op("slice", h, ranges=[(0, 1), (0, k)]))
                nxt.append(b.op("slice", h, ranges=[(0, 1), (k, w)]))
            else:
                nxt.append(_dense(b, h, counter, int(rng.integers(2, max_width + 1)), act()))
        branches = nxt

    if len(branches) > 1:
        branches = [b.op("concat", *branches, axis=1)]
    out = _dense(b, branches[0], counter, int(rng.integers(1, 5)), act())
    outputs = [out]
    if rng.random() < 0.3:
        outputs.append(b.op("sum", out))
    return b.build(outputs)


def relu_masking_fixture():
    """Dense-relu-dense graph with a hand-set negative column feeding the relu.

    Under one-hot probes the first hidden unit never activates, so plain
    gradient probing misses its weights and everything downstream of it.
    """
    b = GraphBuilder()
    x = b.input(["a", "b", "c"])
    h = b.dense(x, "1", 3, "relu")
    y = b.dense(h, "2", 2, "tanh")
    graph = b.build([y])
    params = ParamStore({
        "W_1": [[-0.5, 0.3, 0.2], [-0.4, 0.1, 0.6], [-0.2, 0.5, 0.3]],
        "b_1": [0.0, 0.0, 0.0],
        "W_2": [[0.7, -0.2], [0.3, 0.4], [-0.6, 0.5]],
        "b_2": [0.0, 0.0],
    })
    return graph, params


def maxpool_masking_fixture():
    """Dense layer into a max-pool: only the winning unit of each window gets gradient."""
    b = GraphBuilder()
    x = b.input(["p", "q", "r", "s"])
    h = b.dense(x, "1", 4, "tanh", bias=False)
    pooled = b.op("maxpool", h, window=2, stride=2)
    y = b.dense(pooled, "2", 2, "tanh")
    graph = b.build([y])
    rng = np.random.default_rng(3)
    params = ParamStore({
        "W_1": rng.uniform(0.1, 1.0, size=(4, 4)) / 4,
        "W_2": rng.uniform(0.1, 1.0, size=(2, 2)) / 2,
        "b_2": [0.0, 0.0],
    })
    return graph, params


def bench_graph(n_features, depth, width=32, seed=0):
    """Input split into two groups, one dense stack per group, concat, deep dense layers."""
    rng = np.random.default_rng(seed)
    names = [f"x{i}" for i in range(n_features)]
    half = max(1, n_features // 2)
    b = GraphBuilder()
    counter = [0]
    branches = []
    for group in (names[:half], names[half:]):
        if group:
            branches.append(_dense(b, b.input(group), counter, width, "tanh"))
    h = b.op("concat", *branches, axis=1) if len(branches) > 1 else branches[0]
    for d in range(max(depth - 1, 0)):
        h = _dense(b, h, counter, width, ("relu", "tanh", "sigmoid")[int(rng.integers(3))])
        if d == 0:
            h = b.op("maxpool", h, window=2, stride=2)
    return b.build([_dense(b, h, counter, 4, "tanh")])
