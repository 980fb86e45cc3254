"""Feature-aware parameter surgery for small computational graphs."""

from .engine import backward, forward, init_params, mapping_safe_transform
from .errors import GraftError
from .estimators import BooleanMapper, GradientMapper, OracleMapper, Surgeon
from .ir import FeatureSchema, Graph, GraphBuilder, Node, ParamStore, infer_shapes
from .mapping import InteractionMap, ParamAnnotations, boolean_map, gradient_map, maps_equal, oracle_map
from .planner import GroupTable, MapDiff, SurgeryPlan, build_group_table, diff_maps, make_plan
from .transfer import apply_plan, verify_equivalence

__version__ = "0.1.0"

__all__ = [
    "BooleanMapper", "FeatureSchema", "GradientMapper", "GraftError", "Graph", "GraphBuilder",
    "GroupTable", "InteractionMap", "MapDiff", "Node", "OracleMapper", "ParamAnnotations",
    "ParamStore", "Surgeon", "SurgeryPlan", "apply_plan", "backward", "boolean_map",
    "build_group_table", "diff_maps", "forward", "gradient_map", "infer_shapes", "init_params",
    "make_plan", "mapping_safe_transform", "maps_equal", "oracle_map", "verify_equivalence",
]
