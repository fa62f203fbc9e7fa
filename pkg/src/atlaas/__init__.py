"""Two-layer semantic overlay: gossip communities with elected representatives over a Kademlia index."""

from .profiles import (
    ParameterError,
    Profile,
    Taxonomy,
    ZipfAssignment,
    assign_profiles,
    brute_force_top_k,
    expand_profile,
    generate_taxonomy,
    similarity,
)
from .query import Query, QueryResult, efficiency_report, resolve, resolve_flood
from .sim import SimConfig, Simulator, run

__all__ = [
    "ParameterError",
    "Profile",
    "Query",
    "QueryResult",
    "SimConfig",
    "Simulator",
    "Taxonomy",
    "ZipfAssignment",
    "assign_profiles",
    "brute_force_top_k",
    "efficiency_report",
    "expand_profile",
    "generate_taxonomy",
    "resolve",
    "resolve_flood",
    "run",
    "similarity",
]
