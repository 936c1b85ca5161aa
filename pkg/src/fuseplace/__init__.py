"""Choose which serverless functions to fuse and where to run them
(edge device or a cloud memory tier) to minimize monthly price under a
latency threshold."""

from .costgraph import CostGraph, build_cost_graph, enumerate_spans, placement_set
from .csp import FrontierPoint, OptimizeResult, larac, pareto_frontier, shortest_path_aggregated, sweep_frontier
from .estimator import Mode, Plan, Span, estimate, plan_latency, plan_price, span_cost
from .model import (
    FunctionProfile,
    NetworkConfig,
    PlacementTarget,
    PricingConfig,
    allowed_memory_tier,
    validate_profile,
)
from .normalize import FnSeq, WorkflowSpec, to_fnseq
from .oracle import brute_force_optimize, enumerate_solutions

__version__ = "0.1.0"

__all__ = [
    "CostGraph",
    "FnSeq",
    "FrontierPoint",
    "FunctionProfile",
    "Mode",
    "NetworkConfig",
    "OptimizeResult",
    "PlacementTarget",
    "Plan",
    "PricingConfig",
    "Span",
    "WorkflowSpec",
    "allowed_memory_tier",
    "brute_force_optimize",
    "build_cost_graph",
    "enumerate_solutions",
    "enumerate_spans",
    "estimate",
    "larac",
    "pareto_frontier",
    "placement_set",
    "plan_latency",
    "plan_price",
    "shortest_path_aggregated",
    "span_cost",
    "sweep_frontier",
    "to_fnseq",
    "validate_profile",
]
