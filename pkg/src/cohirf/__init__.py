"""CoHiRF: consensus hierarchical random-feature clustering."""

from .datagen import SyntheticSpec, gen_hypercube, gen_separated_gaussians
from .engine import CoHiRF, CohirfConfig, CohirfResult, cohirf_fit, cohirf_sampled_fit
from .exceptions import (
    CohirfError,
    HierarchyError,
    InvalidArgumentError,
    InvalidDataError,
    LoadError,
)
from .hierarchy import HierarchyNode, HierarchyTree, reconstruct_final_clusters
from .kmeans import KMeansResult, kmeans_fit, kmeans_init
from .medoid import MedoidMode, medoid_oracle, select_medoid
from .metrics import adjusted_rand_index, rand_index

__version__ = "0.1.0"

__all__ = [
    "CoHiRF",
    "CohirfConfig",
    "CohirfError",
    "CohirfResult",
    "HierarchyError",
    "HierarchyNode",
    "HierarchyTree",
    "InvalidArgumentError",
    "InvalidDataError",
    "KMeansResult",
    "LoadError",
    "MedoidMode",
    "SyntheticSpec",
    "adjusted_rand_index",
    "cohirf_fit",
    "cohirf_sampled_fit",
    "gen_hypercube",
    "gen_separated_gaussians",
    "kmeans_fit",
    "kmeans_init",
    "medoid_oracle",
    "rand_index",
    "reconstruct_final_clusters",
    "select_medoid",
]
