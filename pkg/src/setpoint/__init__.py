"""Numerical laboratory for fixed points of set-valued maps on finite metric spaces."""
from .metric import (
    MetricSpace,
    StructuralError,
    chebyshev,
    dyadic_space,
    hausdorff,
    line_space,
    metric_segment,
    nearest_points,
    point_set,
    point_set_dist,
    validate_metric,
)
from .multimap import MultiMap, fixed_points, gap, graph, lipschitz_estimate

__version__ = "0.1.0"

__all__ = [
    "MetricSpace", "MultiMap", "StructuralError", "chebyshev", "dyadic_space", "fixed_points",
    "gap", "graph", "hausdorff", "line_space", "lipschitz_estimate", "metric_segment",
    "nearest_points", "point_set", "point_set_dist", "validate_metric",
]
