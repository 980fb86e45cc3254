"""Applying surgery plans and checking that the new model reproduces the old one."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import forward, param_roles
from .errors import GraftError, HashMismatchError, ValidationError
from .io import graph_hash
from .ir import ParamStore
from .mapping.gradient import default_threads
from .mapping.interaction import from_runs
from .planner import check_coverage
from .validation import check_params


@dataclass
class TransferResult:
    params: ParamStore
    copied: int
    total: int

    @property
    def transfer_pct(self):
        return 100.0 * self.copied / self.total if self.total else 100.0


def apply_plan(plan, old_params, new_graph, old_graph=None):
    """Build the new parameter store from ``plan``.

    Hash and coverage checks run before anything is written. Copies are
    bit-exact; ``positive_random`` inits draw U[0.1, 1.0] / fan-in from the
    step's seed (additive parameters stay zero).
    """
    if plan.new_hash != graph_hash(new_graph):
        raise HashMismatchError("plan was made for a different new graph")
    if old_graph is not None:
        if plan.old_hash != graph_hash(old_graph):
            raise HashMismatchError("plan was made for a different old graph")
        old_params = check_params(old_graph, old_params)
    shapes = {n.name: n.shape for n in new_graph.params}
    check_coverage(plan.steps, shapes)
    for step in plan.steps:
        if step.op != "copy":
            continue
        if step.src not in old_params:
            raise ValidationError(f"plan copies from {step.src!r}, which the old params lack")
        idx = from_runs(step.src_runs)
        if idx.size and idx.max() >= old_params[step.src].size:
            raise ValidationError(f"plan reads past the end of old param {step.src!r}")

    roles, fan_in = param_roles(new_graph)
    out = {name: np.zeros(shape) for name, shape in shapes.items()}
    copied = 0
    seeds = sorted({s.seed for s in plan.steps if s.op == "init" and s.mode == "positive_random"})
    rngs = {seed: np.random.default_rng(seed) for seed in seeds}
    for step in plan.steps:
        dst = out[step.dst].reshape(-1)
        dst_idx = from_runs(step.dst_runs)
        if step.op == "copy":
            dst[dst_idx] = np.asarray(old_params[step.src]).reshape(-1)[from_runs(step.src_runs)]
            copied += dst_idx.size
        elif step.mode == "positive_random" and roles[step.dst] != "additive":
            dst[dst_idx] = rngs[step.seed].uniform(0.1, 1.0, size=dst_idx.size) / fan_in[step.dst]
        else:
            dst[dst_idx] = 0.0
    total = sum(int(np.prod(s, dtype=np.int64)) for s in shapes.values())
    return TransferResult(ParamStore(out), copied, total)


@dataclass
class EquivalenceReport:
    states: int
    max_abs_diff: float
    per_state: list = field(default_factory=list)
    transfer_pct: float | None = None

    def to_dict(self):
        d = {"states": self.states, "max_abs_diff": self.max_abs_diff}
        if self.transfer_pct is not None:
            d["transfer_pct"] = self.transfer_pct
        return d


def _state_inputs(graph, values):
    """Features absent from ``values`` are zero."""
    inputs = {}
    for node in graph.inputs:
        inputs[node.id] = np.array([[values.get(name, 0.0) for name in node.schema]])
    return inputs


def verify_equivalence(old_graph, old_params, new_graph, new_params, renames=None,
                       n_states=100, seed=0, n_threads=None):
    """Max absolute output difference between the two models over random states.

    Kept features are drawn from U[-1, 1] and written to both models, inserted
    features are drawn for the new model only, removed features are zero in
    the old model. ``renames`` maps old feature names to new ones.
    """
    renames = dict(renames or {})
    old_params = check_params(old_graph, old_params)
    new_params = check_params(new_graph, new_params)
    unknown = sorted(set(renames) - set(old_graph.feature_names))
    if unknown:
        raise ValidationError(f"rename table names features absent from the old schema: {', '.join(unknown)}")
    old_names = [renames.get(f, f) for f in old_graph.feature_names]
    new_names = new_graph.feature_names
    if len(set(old_names)) != len(old_names):
        raise ValidationError("rename table maps two old features to one name")
    kept = [f for f in new_names if f in set(old_names)]
    inserted = [f for f in new_names if f not in set(old_names)]
    if len(old_graph.outputs) != len(new_graph.outputs):
        raise ValidationError("old and new graphs have different numbers of outputs")
    for a, b in zip(old_graph.outputs, new_graph.outputs):
        if old_graph[a].shape != new_graph[b].shape:
            raise ValidationError(f"output shapes differ: {list(old_graph[a].shape)} vs {list(new_graph[b].shape)}")
    back = {renames.get(f, f): f for f in old_graph.feature_names}

    rng = np.random.default_rng(seed)
    draws = rng.uniform(-1.0, 1.0, size=(n_states, len(kept) + len(inserted)))

    def one(s):
        kept_vals = dict(zip(kept, draws[s, :len(kept)]))
        new_vals = {**kept_vals, **dict(zip(inserted, draws[s, len(kept):]))}
        old_vals = {back[f]: v for f, v in kept_vals.items()}
        old_out, _ = forward(old_graph, old_params, _state_inputs(old_graph, old_vals), check=False)
        new_out, _ = forward(new_graph, new_params, _state_inputs(new_graph, new_vals), check=False)
        diffs = [float(np.max(np.abs(a - b), initial=0.0)) for a, b in zip(old_out, new_out)]
        if not np.all(np.isfinite(diffs)):
            raise GraftError(f"state {s}: non-finite output")
        return max(diffs, default=0.0)

    n_threads = n_threads or default_threads()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            per_state = list(pool.map(one, range(n_states)))
    else:
        per_state = [one(s) for s in range(n_states)]
    return EquivalenceReport(n_states, max(per_state, default=0.0), per_state)
