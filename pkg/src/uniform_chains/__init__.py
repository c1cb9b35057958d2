"""Chain decompositions of the Boolean lattice and their applications."""

from .errors import (CapabilityError, ChainError, DimensionError, DomainError,
                     InternalInvariantError)
from .lattice import (Chain, ChainDecomposition, SizeProfile, Subset, UniformityStats,
                      VerificationReport, central_binomial, comparability_edge_count,
                      dominance_check, is_comparable, lubell_mass, lubell_mass_exact,
                      read_chain_dump, uniformity_stats, verify_chain_decomposition,
                      write_chain_dump)
from .matching import (BipartiteGraph, Matching, extend_to_maximum_covering, lym_check,
                       maximum_matching, min_chain_partition)
from .symmetric import sigma_profile, symmetric_decomposition, upper_shadow_chain_cover
from .pipeline import compute_constants, run_pipeline

__all__ = [
    "CapabilityError", "ChainError", "DimensionError", "DomainError", "InternalInvariantError",
    "Chain", "ChainDecomposition", "SizeProfile", "Subset", "UniformityStats",
    "VerificationReport", "central_binomial", "comparability_edge_count", "dominance_check",
    "is_comparable", "lubell_mass", "lubell_mass_exact", "read_chain_dump", "uniformity_stats",
    "verify_chain_decomposition", "write_chain_dump", "BipartiteGraph", "Matching",
    "extend_to_maximum_covering", "lym_check", "maximum_matching", "min_chain_partition",
    "sigma_profile", "symmetric_decomposition", "upper_shadow_chain_cover",
    "compute_constants", "run_pipeline",
]
