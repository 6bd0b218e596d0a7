"""Interaction matrix, interaction network and interaction model for cascading failures."""

from .cascades import Cascade, CascadeError, CascadeSet, load_cascades, save_cascades, take_prefix
from .network import (
    InteractionNetwork,
    LayeredDag,
    all_link_indices,
    build_network,
    key_components,
    key_links,
    layered_subgraph,
    link_index,
    propagation_capacity_network,
    strengths,
)
from .quantify import InteractionCounts, InteractionMatrix, Quantification, quantify
from .simulate import MitigationPlan, SimConfig, apply_mitigation, random_plan, simulate, simulate_cascade
from .stats import estimate_lambda, normalize_weights, outage_distribution, similarity

__version__ = "0.1.0"

__all__ = [
    "Cascade",
    "CascadeError",
    "CascadeSet",
    "load_cascades",
    "save_cascades",
    "take_prefix",
    "InteractionNetwork",
    "LayeredDag",
    "all_link_indices",
    "build_network",
    "key_components",
    "key_links",
    "layered_subgraph",
    "link_index",
    "propagation_capacity_network",
    "strengths",
    "InteractionCounts",
    "InteractionMatrix",
    "Quantification",
    "quantify",
    "MitigationPlan",
    "SimConfig",
    "apply_mitigation",
    "random_plan",
    "simulate",
    "simulate_cascade",
    "estimate_lambda",
    "normalize_weights",
    "outage_distribution",
    "similarity",
]
