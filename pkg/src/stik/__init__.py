"""Simulation and second-order analysis of spatio-temporal point patterns:
space-time inhomogeneous K-function and pair correlation estimation under
multiple edge corrections, intensity estimation, and a Monte Carlo study
harness."""

from .estimators import (
    ALL_CORRECTIONS,
    EdgeCorrection,
    EvalGrid,
    SecondOrderSurface,
    default_grid,
    g_hat,
    k_from_g,
    k_hat,
    pair_weight,
)
from .geometry import (
    STPoint,
    STWindow,
    boundary_dist_spatial,
    circle_proportion_inside,
    erode,
    temporal_weight,
    translation_overlap,
    unit_cube,
)
from .intensity import (
    ConstantIntensity,
    CosTrendIntensity,
    ExpTrendIntensity,
    ProductIntensity,
)
from .patterns import PointPattern, load_pattern, save_pattern
from .simulate import (
    ClusterSpec,
    pcp1_g,
    pcp1_k,
    poisson_k,
    replication_rng,
    simulate_hpp,
    simulate_ipp,
    simulate_pcp,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_CORRECTIONS",
    "ClusterSpec",
    "ConstantIntensity",
    "CosTrendIntensity",
    "EdgeCorrection",
    "EvalGrid",
    "ExpTrendIntensity",
    "PointPattern",
    "ProductIntensity",
    "STPoint",
    "STWindow",
    "SecondOrderSurface",
    "boundary_dist_spatial",
    "circle_proportion_inside",
    "default_grid",
    "erode",
    "g_hat",
    "k_from_g",
    "k_hat",
    "load_pattern",
    "pair_weight",
    "pcp1_g",
    "pcp1_k",
    "poisson_k",
    "replication_rng",
    "save_pattern",
    "simulate_hpp",
    "simulate_ipp",
    "simulate_pcp",
    "temporal_weight",
    "translation_overlap",
    "unit_cube",
]
