"""scikit-learn style front ends for the mappers and the surgery pipeline.

Mappers are fit on a graph and expose ``interaction_map_``. ``Surgeon`` is fit
on an (old graph, new graph) pair and transforms old parameters into new
ones::

    surgeon = Surgeon(init="zero").fit(old_graph, new_graph)
    new_params = surgeon.transform(old_params)
    surgeon.verify(old_params).max_abs_diff
"""

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .io import graph_hash
from .mapping import ParamAnnotations, boolean_map, gradient_map, oracle_map
from .mapping.gradient import THRESHOLD
from .mapping.oracle import MAX_SCALAR_EDGES
from .planner import build_group_table, diff_maps, make_plan
from .transfer import apply_plan, verify_equivalence
from .validation import check_graph, check_params


class BooleanMapper(BaseEstimator):
    """Single abstract pass; ignores parameter values entirely."""

    def fit(self, graph, y=None):
        check_graph(graph)
        self.annotations_, self.interaction_map_ = boolean_map(graph)
        self.n_interactions_ = self.interaction_map_.count()
        return self


class GradientMapper(BaseEstimator):
    """One one-hot forward/backward probe per feature.

    Parameters
    ----------
    seed : int
        Seed for ``init_params`` when no explicit params are passed to ``fit``.
    init : {"positive", "signed"}
    safe : bool
        Apply ``mapping_safe_transform`` before probing.
    threshold : float
        Magnitude above which a gradient or activation counts as nonzero.
    n_threads : int or None
        Parallel probes; ``None`` reads ``GRAFT_THREADS``.
    """

    def __init__(self, seed=0, init="positive", safe=True, threshold=THRESHOLD, n_threads=None):
        self.seed = seed
        self.init = init
        self.safe = safe
        self.threshold = threshold
        self.n_threads = n_threads

    def fit(self, graph, y=None, params=None):
        check_graph(graph)
        self.interaction_map_ = gradient_map(graph, seed=self.seed, init=self.init, safe=self.safe,
                                             params=params, threshold=self.threshold, n_threads=self.n_threads)
        self.annotations_ = ParamAnnotations.from_interaction_map(
            self.interaction_map_, {n.name: n.shape for n in graph.params})
        self.n_interactions_ = self.interaction_map_.count()
        return self


class OracleMapper(BaseEstimator):
    def __init__(self, max_scalar_edges=MAX_SCALAR_EDGES):
        self.max_scalar_edges = max_scalar_edges

    def fit(self, graph, y=None):
        check_graph(graph)
        self.interaction_map_ = oracle_map(graph, self.max_scalar_edges)
        self.annotations_ = ParamAnnotations.from_interaction_map(
            self.interaction_map_, {n.name: n.shape for n in graph.params})
        self.n_interactions_ = self.interaction_map_.count()
        return self


_MAPPERS = {"boolean": BooleanMapper, "gradient": GradientMapper, "oracle": OracleMapper}


def make_mapper(method, seed=0):
    if method not in _MAPPERS:
        raise ValueError(f"unknown mapping method {method!r}; choose from {sorted(_MAPPERS)}")
    return GradientMapper(seed=seed) if method == "gradient" else _MAPPERS[method]()


class Surgeon(BaseEstimator):
    """Plan and apply parameter surgery from an old graph to a new one.

    Parameters
    ----------
    method : {"boolean", "gradient", "oracle"}
        How the interaction maps are computed.
    init : {"zero", "positive_random"}
        Initialization of fresh parameter blocks.
    seed : int
        Seed for gradient mapping and for ``positive_random`` init.
    renames : dict or None
        Old feature name -> new feature name.
    """

    def __init__(self, method="boolean", init="zero", seed=0, renames=None):
        self.method = method
        self.init = init
        self.seed = seed
        self.renames = renames

    def fit(self, old_graph, new_graph):
        check_graph(old_graph)
        check_graph(new_graph)
        old_ann = make_mapper(self.method, self.seed).fit(old_graph).annotations_
        new_ann = make_mapper(self.method, self.seed).fit(new_graph).annotations_
        self.old_graph_, self.new_graph_ = old_graph, new_graph
        self.old_table_ = build_group_table(old_ann, graph_hash(old_graph))
        self.new_table_ = build_group_table(new_ann, graph_hash(new_graph))
        self.diff_ = diff_maps(self.old_table_, self.new_table_, self.renames)
        self.plan_ = make_plan(self.diff_, self.init, self.seed)
        return self

    def transform(self, old_params):
        check_is_fitted(self, "plan_")
        old_params = check_params(self.old_graph_, old_params)
        result = apply_plan(self.plan_, old_params, self.new_graph_, self.old_graph_)
        self.transfer_pct_ = result.transfer_pct
        return result.params

    def verify(self, old_params, new_params=None, n_states=100, seed=0):
        """Equivalence report of the old model against the transplanted new one."""
        check_is_fitted(self, "plan_")
        if new_params is None:
            new_params = self.transform(old_params)
        report = verify_equivalence(self.old_graph_, old_params, self.new_graph_, new_params,
                                    self.renames, n_states, seed)
        report.transfer_pct = getattr(self, "transfer_pct_", None)
        return report
