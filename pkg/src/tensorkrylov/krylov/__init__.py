"""Matrix and tensor Krylov recursions."""

from .basis import CoeffTensor, OrthoBasis, orthogonalize_append
from .contracted import contracted_lanczos, contracted_recursion
from .matrix import arnoldi, golub_kahan, lanczos
from .maximal import maximal_recursion, maximal_truncate
from .minimal import minimal_recursion, modified_minimal_recursion, small_mode_recursion
from .optimized import optimized_candidate, optimized_recursion
from .state import (
    BreakdownError,
    BreakdownEvent,
    KrylovState,
    StartVectors,
    load_state,
    save_state,
)
from .verify import factorization_residuals

__all__ = [
    "CoeffTensor",
    "OrthoBasis",
    "orthogonalize_append",
    "arnoldi",
    "golub_kahan",
    "lanczos",
    "minimal_recursion",
    "modified_minimal_recursion",
    "small_mode_recursion",
    "maximal_recursion",
    "maximal_truncate",
    "optimized_candidate",
    "optimized_recursion",
    "contracted_lanczos",
    "contracted_recursion",
    "BreakdownError",
    "BreakdownEvent",
    "KrylovState",
    "StartVectors",
    "load_state",
    "save_state",
    "factorization_residuals",
]
