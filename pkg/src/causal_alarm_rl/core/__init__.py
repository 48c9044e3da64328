"""Core domain types: causal graphs, device topology, observations and metrics."""

from causal_alarm_rl.core.graph import (
    CausalGraph,
    default_type_names,
    find_cycle,
    load_graph,
    random_dag,
    save_graph,
    topological_order,
    transitive_closure,
)
from causal_alarm_rl.core.metrics import GraphMetrics, graph_metrics
from causal_alarm_rl.core.topology import (
    Topology,
    generate_topology,
    load_topology_csv,
    normalized_adjacency_powers,
    save_topology_csv,
)
from causal_alarm_rl.core.types import (
    ActionId,
    Observation,
    Transition,
    active_flags,
    build_observation,
    type_activity_from_obs,
)

__all__ = [
    "ActionId",
    "CausalGraph",
    "GraphMetrics",
    "Observation",
    "Topology",
    "Transition",
    "active_flags",
    "build_observation",
    "default_type_names",
    "find_cycle",
    "generate_topology",
    "graph_metrics",
    "load_graph",
    "load_topology_csv",
    "normalized_adjacency_powers",
    "random_dag",
    "save_graph",
    "save_topology_csv",
    "topological_order",
    "transitive_closure",
    "type_activity_from_obs",
]
