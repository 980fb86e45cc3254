from .boolean import boolean_map, propagate
from .compare import MapComparison, maps_equal
from .gradient import gradient_map
from .interaction import InteractionMap, ParamAnnotations, from_runs, runs_size, to_runs
from .oracle import oracle_map

__all__ = [
    "InteractionMap", "MapComparison", "ParamAnnotations", "boolean_map", "from_runs",
    "gradient_map", "maps_equal", "oracle_map", "propagate", "runs_size", "to_runs",
]
