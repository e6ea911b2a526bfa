"""Weight-independent clusters of consensus networks over directed graphs."""

__version__ = "0.1.0"

from .clusters import (
    ClusterPartition,
    Kind,
    Label,
    NodeClassification,
    PathMatrix,
    TopologicalCluster,
    analyze,
    assign_clusters,
    brute_force_clusters,
    check_cluster_conditions,
    classify_by_degree,
    classify_popular,
    classify_popular_dominators,
    enumerate_acyclic_paths,
    topological_clusters,
)
from .condensation import CondensationResult, SccPartition, find_lsccs, lscc_condensation, strongly_connected_components
from .dynamics import (
    EmpiricalPartition,
    SteadyStateResult,
    WeightAssignment,
    draw_weights,
    empirical_clusters,
    group_by_value,
    steady_state,
    weighted_clusters,
)
from .graph import DiGraph, Edge, format_edge_list, induced_subgraph, laplacian, parse_edge_list, read_edge_list
