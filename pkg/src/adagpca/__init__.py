"""Kernel-smoothed generalized PCA toolkit.

Builds variable-similarity kernels from phylogenetic trees or Euclidean
distances, selects a smoothing level by maximum marginal likelihood, runs
the resulting generalized PCA, and exposes the whole family of solutions
(from the DPCoA metric to standard PCA) for interactive exploration.
"""

from .dpcoa import CountTable, DpcoaResult, count_table, dpcoa_equivalence_report, dpcoa_gpca, dpcoa_stepwise
from .family import (
    AdaptiveResult,
    FamilyFit,
    FamilyPoint,
    adaptive_gpca,
    family_grid,
    family_inner_product,
    fit_r,
    profile_loglik,
    profile_sigma2,
)
from .gpca import GpcaResult, gpca
from .kernels import VariableKernel, check_kernel, distances_to_kernel, kernel_from_matrix, tree_to_kernel
from .linalg import SymEigen, matmul, psd_function, sym_eigen
from .simulate import SimConfig, SimOutcome, random_tree, run_comparison, simulate_a, simulate_b
from .trees import PhyloTree, parse_newick, write_newick

__all__ = [
    "AdaptiveResult",
    "CountTable",
    "DpcoaResult",
    "FamilyFit",
    "FamilyPoint",
    "GpcaResult",
    "PhyloTree",
    "SimConfig",
    "SimOutcome",
    "SymEigen",
    "VariableKernel",
    "adaptive_gpca",
    "check_kernel",
    "count_table",
    "distances_to_kernel",
    "dpcoa_equivalence_report",
    "dpcoa_gpca",
    "dpcoa_stepwise",
    "family_grid",
    "family_inner_product",
    "fit_r",
    "gpca",
    "kernel_from_matrix",
    "matmul",
    "parse_newick",
    "profile_loglik",
    "profile_sigma2",
    "psd_function",
    "random_tree",
    "run_comparison",
    "simulate_a",
    "simulate_b",
    "sym_eigen",
    "tree_to_kernel",
    "write_newick",
]
