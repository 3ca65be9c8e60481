"""Discrete-event network simulation: topologies, routing, runs and metrics."""

from .engine import (
    AttackSpec,
    ConfigError,
    CostTable,
    SimConfig,
    Simulation,
    TrafficSpec,
    run,
    run_flood,
)
from .metrics import RunMetrics, RttSample, Tally
from .routing import DisconnectedTopology, ShortestPathTree, build_routes, hop_counts
from .topology import LinkSpec, NodeSpec, Role, Topology, TopologyError, generate_topology

__all__ = [
    "AttackSpec", "ConfigError", "CostTable", "SimConfig", "Simulation", "TrafficSpec",
    "run", "run_flood", "RunMetrics", "RttSample", "Tally", "DisconnectedTopology",
    "ShortestPathTree", "build_routes", "hop_counts", "LinkSpec", "NodeSpec", "Role",
    "Topology", "TopologyError", "generate_topology",
]
