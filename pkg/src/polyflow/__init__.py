"""Exact tools for polyhedral hybrid systems with constant drifts.

The pipeline: validate a tiling, certify nonexpansiveness with exact LPs,
build the convex piecewise-linear potential whose negative subgradient flow
is the system, and simulate exact trajectories from either form.
"""

from .certify import (
    Certificate,
    ConservationViolated,
    GammaDelta,
    Path,
    certify_nonexpansive,
    fine_path_through,
    gamma_delta,
    local_conservation,
    path_weight,
    sample_fine_path,
    weighted_adjacency,
)
from .flow import (
    Terminal,
    Trajectory,
    check_nonexpansive_trajectories,
    min_norm_point,
    proximal_step,
    proximal_trajectory,
    resolve_velocity,
    simulate,
)
from .potential import (
    PWLPotential,
    build_potential,
    canonical_tiling,
    potential_to_hybrid,
    region_weights,
    same_regions,
    subdifferential,
    verify_maximizers,
)
from .tiling import FORMAT, HybridSystem, Polyhedron, Region, active_set, adjacency, validate

__version__ = "0.1.0"

__all__ = [
    "FORMAT",
    "Certificate",
    "ConservationViolated",
    "GammaDelta",
    "HybridSystem",
    "Path",
    "Polyhedron",
    "PWLPotential",
    "Region",
    "Terminal",
    "Trajectory",
    "active_set",
    "adjacency",
    "build_potential",
    "canonical_tiling",
    "certify_nonexpansive",
    "check_nonexpansive_trajectories",
    "fine_path_through",
    "gamma_delta",
    "local_conservation",
    "min_norm_point",
    "path_weight",
    "potential_to_hybrid",
    "proximal_step",
    "proximal_trajectory",
    "region_weights",
    "resolve_velocity",
    "same_regions",
    "sample_fine_path",
    "simulate",
    "subdifferential",
    "validate",
    "verify_maximizers",
    "weighted_adjacency",
]
