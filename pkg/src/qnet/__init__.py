"""Cost-vector planning for entanglement distribution networks.

The package models each channel by a (fidelity, success probability)
pair and provides the two composition operations, swapping (series) and
purification (parallel), together with graph reduction, route planning,
and a Monte-Carlo cross-check of the analytic costs.
"""
from .algebra import (
    AlgebraDomainError,
    CostVector,
    Fidelity,
    GridSpec,
    GridStrategy,
    OperationCosts,
    dephasing_bell_fidelity,
    grid_cost,
    purify_acceptance,
    purify_chain,
    purify_cost,
    purify_fidelity,
    swap_chain,
    swap_cost,
    swap_fidelity,
    swap_inverse,
)
from .graph import (
    Channel,
    GraphFormatError,
    NetworkGraph,
    Node,
    NodeRole,
    parse_graph,
    serialize_graph,
)
from .montecarlo import DensityMatrix4, McEstimate, bell_fidelity, dephase_bell, estimate
from .reduction import (
    Leaf,
    Purify,
    ReductionError,
    ReductionResult,
    Swap,
    evaluate_strategy,
    is_fully_reduced_pair,
    parallel_step,
    reduce_to_fixpoint,
    replay_trace,
    serialize_strategy,
    series_step,
)
from .routing import (
    InfeasibleRouteError,
    RouteRequest,
    RouteResult,
    SearchBoundError,
    SearchKind,
    brute_force_best,
    route,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraDomainError",
    "Channel",
    "CostVector",
    "DensityMatrix4",
    "Fidelity",
    "GraphFormatError",
    "GridSpec",
    "GridStrategy",
    "InfeasibleRouteError",
    "Leaf",
    "McEstimate",
    "NetworkGraph",
    "Node",
    "NodeRole",
    "OperationCosts",
    "Purify",
    "ReductionError",
    "ReductionResult",
    "RouteRequest",
    "RouteResult",
    "SearchBoundError",
    "SearchKind",
    "Swap",
    "bell_fidelity",
    "brute_force_best",
    "dephase_bell",
    "dephasing_bell_fidelity",
    "estimate",
    "evaluate_strategy",
    "grid_cost",
    "is_fully_reduced_pair",
    "parallel_step",
    "parse_graph",
    "purify_acceptance",
    "purify_chain",
    "purify_cost",
    "purify_fidelity",
    "reduce_to_fixpoint",
    "replay_trace",
    "route",
    "serialize_graph",
    "serialize_strategy",
    "series_step",
    "swap_chain",
    "swap_cost",
    "swap_fidelity",
    "swap_inverse",
    "__version__",
]
