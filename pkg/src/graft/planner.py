"""Feature-group lookup tables, map diffing and surgery plans.

A feature group is the exact set of feature names annotated on a parameter
element. Groups survive the first mixing layer as blocks (e.g. the rows of a
deep weight matrix fed by one concat branch), so they serve as the
cross-version key. Names, not schema indices, carry identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousMatchError, CoverageError
from .mapping.interaction import from_runs, runs_size, to_runs


@dataclass(frozen=True)
class Block:
    """All elements of one parameter sharing one feature group."""

    param: str
    runs: tuple

    def __post_init__(self):
        object.__setattr__(self, "runs", tuple(tuple(r) for r in self.runs))

    @property
    def size(self):
        return runs_size(self.runs)

    def __str__(self):
        return f"{self.param}{[list(r) for r in self.runs]}"


@dataclass
class GroupTable:
    """Feature group (sorted name tuple) -> blocks, one per parameter.

    The empty key collects elements that interacted with no feature.
    """

    features: list
    groups: dict
    param_shapes: dict
    graph_hash: str = ""

    def __getitem__(self, key):
        return self.groups[tuple(sorted(key))]

    def __len__(self):
        return len(self.groups)

    def blocks(self):
        return [(key, b) for key in sorted(self.groups) for b in self.groups[key]]


def build_group_table(annotations, graph_hash=""):
    """Partition every parameter element by its exact feature set."""
    features = annotations.features
    groups = {}
    for param in sorted(annotations.masks):
        flat = annotations.masks[param].reshape(-1, len(features))
        if flat.shape[0] == 0:
            continue
        # identical bit rows share a group; np.unique gives canonical order
        rows, inverse = np.unique(flat, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        for r, bits in enumerate(rows):
            key = tuple(sorted(f for f, b in zip(features, bits) if b))
            idx = np.flatnonzero(inverse == r)
            groups.setdefault(key, []).append(Block(param, tuple(tuple(x) for x in to_runs(idx))))
    for key in groups:
        groups[key].sort(key=lambda b: b.param)
    groups = {k: groups[k] for k in sorted(groups)}
    return GroupTable(list(features), groups, dict(annotations.param_shapes), graph_hash)


@dataclass
class MapDiff:
    kept: frozenset
    inserted: frozenset
    removed: frozenset
    matched: list
    moved_groups: list
    retired_blocks: list
    fresh_blocks: list
    old_hash: str = ""
    new_hash: str = ""
    new_param_shapes: dict = field(default_factory=dict)

    def summary(self):
        return (f"kept {len(self.kept)}, inserted {len(self.inserted)}, removed {len(self.removed)}; "
                f"{len(self.matched)} matched blocks ({len(self.moved_groups)} moved), "
                f"{len(self.fresh_blocks)} fresh, {len(self.retired_blocks)} retired")


def _candidates(table, kept, renames):
    """(param, projected key) -> [(full key, block)]; projection keeps only kept names."""
    out = {}
    unmatched = []
    for key, block in table.blocks():
        full = tuple(sorted(renames.get(f, f) for f in key))
        projected = tuple(f for f in full if f in kept)
        if full and not projected:
            # only inserted or removed features: nothing to carry across
            unmatched.append(block)
            continue
        out.setdefault((block.param, projected), []).append((full, block))
    return out, unmatched


def _compatible(old_block, new_block, old_shapes, new_shapes):
    return (old_block.size == new_block.size
            and tuple(old_shapes[old_block.param])[1:] == tuple(new_shapes[new_block.param])[1:])


def diff_maps(old: GroupTable, new: GroupTable, renames=None):
    """Match old and new feature groups by name and detect shifted blocks.

    Groups match when, for the same parameter, their keys agree after dropping
    inserted and removed names, and their blocks have the same size and the
    same trailing parameter shape. ``renames`` maps old names to new ones.
    """
    renames = dict(renames or {})
    old_names = {renames.get(f, f) for f in old.features}
    new_names = set(new.features)
    kept = frozenset(old_names & new_names)
    old_cands, retired = _candidates(old, kept, renames)
    new_cands, fresh = _candidates(new, kept, {})

    matched, moved = [], []
    for cand_key in sorted(set(old_cands) | set(new_cands)):
        olds = [b for _, b in old_cands.get(cand_key, [])]
        news = [b for _, b in new_cands.get(cand_key, [])]
        compat = [[_compatible(o, n, old.param_shapes, new.param_shapes) for n in news] for o in olds]
        for i, o in enumerate(olds):
            for j, n in enumerate(news):
                if not compat[i][j]:
                    continue
                rivals = [olds[k] for k in range(len(olds)) if compat[k][j] and k != i]
                rivals += [news[k] for k in range(len(news)) if compat[i][k] and k != j]
                if rivals:
                    names = ", ".join(str(b) for b in [o, n] + rivals)
                    raise AmbiguousMatchError(
                        f"group {list(cand_key[1])} on {cand_key[0]!r} has competing blocks: {names}")
                entry = (cand_key[1], o, n)
                matched.append(entry)
                if o.runs != n.runs:
                    moved.append(entry)
        retired += [o for i, o in enumerate(olds) if not any(compat[i])]
        fresh += [n for j, n in enumerate(news) if not any(row[j] for row in compat)]

    order = lambda b: (b.param, b.runs)  # noqa: E731
    return MapDiff(
        kept=kept,
        inserted=frozenset(new_names - old_names),
        removed=frozenset(old_names - new_names),
        matched=sorted(matched, key=lambda m: order(m[2])),
        moved_groups=sorted(moved, key=lambda m: order(m[2])),
        retired_blocks=sorted(retired, key=order),
        fresh_blocks=sorted(fresh, key=order),
        old_hash=old.graph_hash,
        new_hash=new.graph_hash,
        new_param_shapes={p: tuple(s) for p, s in sorted(new.param_shapes.items())},
    )


@dataclass(frozen=True)
class CopyStep:
    src: str
    src_runs: tuple
    dst: str
    dst_runs: tuple
    op: str = field(default="copy", init=False)


@dataclass(frozen=True)
class InitStep:
    dst: str
    dst_runs: tuple
    mode: str = "zero"
    seed: int = 0
    op: str = field(default="init", init=False)


@dataclass(frozen=True)
class SurgeryPlan:
    old_hash: str
    new_hash: str
    steps: tuple

    def copied_elements(self):
        return sum(runs_size(s.dst_runs) for s in self.steps if s.op == "copy")

    def total_elements(self):
        return sum(runs_size(s.dst_runs) for s in self.steps)


def check_coverage(steps, param_shapes):
    """Raise unless the steps' destination runs tile every parameter exactly once."""
    counts = {p: np.zeros(int(np.prod(s, dtype=np.int64)), dtype=np.int64) for p, s in param_shapes.items()}
    for step in steps:
        if step.dst not in counts:
            raise CoverageError(f"step writes unknown parameter {step.dst!r}")
        idx = from_runs(step.dst_runs)
        if idx.size and idx.max() >= counts[step.dst].size:
            raise CoverageError(f"step writes past the end of {step.dst!r}")
        np.add.at(counts[step.dst], idx, 1)
        if step.op == "copy" and runs_size(step.src_runs) != runs_size(step.dst_runs):
            raise CoverageError(f"copy {step.src}->{step.dst} has mismatched run lengths")
    problems = []
    for p in sorted(counts):
        missing = np.flatnonzero(counts[p] == 0)
        twice = np.flatnonzero(counts[p] > 1)
        if missing.size:
            problems.append(f"{p} uncovered at {to_runs(missing)}")
        if twice.size:
            problems.append(f"{p} written more than once at {to_runs(twice)}")
    if problems:
        raise CoverageError("; ".join(problems))


def make_plan(diff: MapDiff, init="zero", seed=0):
    """Copy every matched block, initialize every fresh block, drop retired ones."""
    if init not in ("zero", "positive_random"):
        raise ValueError(f"unknown init mode {init!r}")
    steps = [CopyStep(o.param, o.runs, n.param, n.runs) for _, o, n in diff.matched]
    steps += [InitStep(b.param, b.runs, init, seed if init == "positive_random" else 0)
              for b in diff.fresh_blocks]
    steps.sort(key=lambda s: (s.dst, s.dst_runs[0] if s.dst_runs else (0, 0)))
    check_coverage(steps, diff.new_param_shapes)
    return SurgeryPlan(diff.old_hash, diff.new_hash, tuple(steps))
