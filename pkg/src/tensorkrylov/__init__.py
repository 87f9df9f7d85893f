"""Krylov-type methods for low multilinear rank approximation of third-order tensors."""

from .counter import OpCounter
from .estimator import KrylovTucker
from .io import load_tensor, read_coordinate, save_tensor, write_coordinate
from .krylov import (
    KrylovState,
    StartVectors,
    contracted_lanczos,
    factorization_residuals,
    maximal_recursion,
    maximal_truncate,
    minimal_recursion,
    modified_minimal_recursion,
    optimized_recursion,
    small_mode_recursion,
)
from .rank1 import Rank1Triple, best_rank111
from .tensor import (
    SparseTensor3,
    contracted_product,
    frob_norm,
    gram,
    gram_matvec,
    inner,
    matricize,
    ttm,
    ttm_multi,
    tvv,
)
from .tucker import TuckerDecomp, approx_error, core_project, hosvd_via_krylov, truncated_hosvd

__version__ = "0.1.0"

__all__ = [
    "OpCounter",
    "KrylovTucker",
    "load_tensor",
    "read_coordinate",
    "save_tensor",
    "write_coordinate",
    "KrylovState",
    "StartVectors",
    "contracted_lanczos",
    "factorization_residuals",
    "maximal_recursion",
    "maximal_truncate",
    "minimal_recursion",
    "modified_minimal_recursion",
    "optimized_recursion",
    "small_mode_recursion",
    "Rank1Triple",
    "best_rank111",
    "SparseTensor3",
    "contracted_product",
    "frob_norm",
    "gram",
    "gram_matvec",
    "inner",
    "matricize",
    "ttm",
    "ttm_multi",
    "tvv",
    "TuckerDecomp",
    "approx_error",
    "core_project",
    "hosvd_via_krylov",
    "truncated_hosvd",
]
