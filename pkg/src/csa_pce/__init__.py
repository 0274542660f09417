"""Christoffel sparse approximation of polynomial chaos expansions."""
from .diagnostics import coherence_scan, gramian, sample_count_bound
from .index_sets import MultiIndexSet, total_degree
from .l1_solver import RecoveryProblem, RecoveryResult, bpdn, bpdn_transformed
from .orthopoly import BasisFamily, beta_family, eval_basis, hermite, jacobi, laguerre, legendre, tensor_eval
from .preconditioner import assemble_system, christoffel_lambda, csa_weights, design_matrix
from .sampling import derive_seed, draw

__all__ = [
    "BasisFamily", "MultiIndexSet", "RecoveryProblem", "RecoveryResult",
    "assemble_system", "beta_family", "bpdn", "bpdn_transformed", "christoffel_lambda", "coherence_scan",
    "csa_weights", "derive_seed", "design_matrix", "draw", "eval_basis", "gramian", "hermite", "jacobi",
    "laguerre", "legendre", "sample_count_bound", "tensor_eval", "total_degree",
]
__version__ = "0.1.0"
