"""Feature/parameter interaction maps and their per-element inverse view."""

from __future__ import annotations

import numpy as np


def to_runs(indices):
    """Coalesce sorted unique flat indices into half-open ``[start, end)`` runs."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) != 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]])) + 1
    return [[int(s), int(e)] for s, e in zip(starts, ends)]


def from_runs(runs):
    if not runs:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([np.arange(s, e, dtype=np.int64) for s, e in runs])


def runs_size(runs):
    return sum(e - s for s, e in runs)


class InteractionMap:
    """Feature name -> {param name -> sorted flat element indices}.

    ``features`` fixes the universe and its order; a feature with no
    interactions maps to an empty dict.
    """

    def __init__(self, features, coords=None, param_shapes=None, canonical=False):
        self.features = list(features)
        self.param_shapes = dict(param_shapes or {})
        self.coords = {f: {} for f in self.features}
        for feature, per_param in (coords or {}).items():
            if feature not in self.coords:
                raise KeyError(f"feature {feature!r} not in universe")
            for param, idx in per_param.items():
                # canonical: caller guarantees sorted unique int64 indices
                idx = idx if canonical else np.unique(np.asarray(idx, dtype=np.int64))
                if idx.size:
                    self.coords[feature][param] = idx

    def __getitem__(self, feature):
        return self.coords[feature]

    def __eq__(self, other):
        if not isinstance(other, InteractionMap):
            return NotImplemented
        if self.features != other.features:
            return False
        for f in self.features:
            a, b = self.coords[f], other.coords[f]
            if sorted(a) != sorted(b) or any(not np.array_equal(a[p], b[p]) for p in a):
                return False
        return True

    def triples(self):
        """Set of ``(feature, param, flat index)`` interactions."""
        return {(f, p, int(i)) for f, per in self.coords.items() for p, idx in per.items() for i in idx}

    def count(self):
        return sum(idx.size for per in self.coords.values() for idx in per.values())

    def runs(self, feature):
        """Canonical ``[(param, runs)]`` list for one feature, params sorted."""
        return [(p, to_runs(self.coords[feature][p])) for p in sorted(self.coords[feature])]

    def __repr__(self):
        return f"InteractionMap({len(self.features)} features, {self.count()} interactions)"


class ParamAnnotations:
    """Per parameter element, the set of features it interacted with.

    ``masks[name]`` is a boolean array of shape ``param_shape + (n_features,)``;
    the trailing axis is the feature bit vector in universe order.
    """

    def __init__(self, features, masks):
        self.features = list(features)
        self.masks = dict(masks)

    @property
    def param_shapes(self):
        return {p: m.shape[:-1] for p, m in self.masks.items()}

    def feature_set(self, param, index):
        """Names annotated on one element; ``index`` is flat or a tuple."""
        mask = self.masks[param]
        flat = mask.reshape(-1, len(self.features))
        if isinstance(index, tuple):
            index = int(np.ravel_multi_index(index, mask.shape[:-1]))
        return frozenset(f for f, bit in zip(self.features, flat[index]) if bit)

    def to_interaction_map(self):
        coords = {f: {} for f in self.features}
        for param in sorted(self.masks):
            flat = self.masks[param].reshape(-1, len(self.features))
            rows, cols = np.nonzero(flat.T)
            if rows.size == 0:
                continue
            bounds = np.searchsorted(rows, np.arange(len(self.features) + 1))
            for t in np.flatnonzero(np.diff(bounds)):
                coords[self.features[t]][param] = cols[bounds[t]:bounds[t + 1]].astype(np.int64)
        return InteractionMap(self.features, coords, self.param_shapes, canonical=True)

    @classmethod
    def from_interaction_map(cls, imap, param_shapes):
        shapes = {p: tuple(s) for p, s in param_shapes.items()}
        masks = {p: np.zeros(s + (len(imap.features),), dtype=bool) for p, s in shapes.items()}
        for t, f in enumerate(imap.features):
            for p, idx in imap.coords[f].items():
                masks[p].reshape(-1, len(imap.features))[idx, t] = True
        return cls(imap.features, masks)

    def __eq__(self, other):
        if not isinstance(other, ParamAnnotations):
            return NotImplemented
        return (self.features == other.features and sorted(self.masks) == sorted(other.masks)
                and all(np.array_equal(self.masks[p], other.masks[p]) for p in self.masks))
