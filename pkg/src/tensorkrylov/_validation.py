"""Input validation helpers shared across the package."""

import numbers

import numpy as np

MODES = (1, 2, 3)


def check_mode(mode):
    """Return ``mode`` as an int in {1, 2, 3} or raise ``ValueError``."""
    if isinstance(mode, bool) or not isinstance(mode, numbers.Integral) or mode not in MODES:
        raise ValueError(f"mode must be one of 1, 2, 3, got {mode!r}")
    return int(mode)


def check_mode_pair(modes):
    """Validate a pair of distinct modes and return it in the given order."""
    try:
        a, b = modes
    except (TypeError, ValueError):
        raise ValueError(f"expected a pair of modes, got {modes!r}") from None
    a, b = check_mode(a), check_mode(b)
    if a == b:
        raise ValueError(f"contracted modes must be distinct, got ({a}, {b})")
    return a, b


def remaining_mode(a, b):
    return 6 - a - b


def check_tensor(A, allow_sparse=True, name="A", check_finite=True):
    """Validate a third-order tensor.

    Dense inputs are converted to a C-contiguous float64 ndarray of ndim 3.
    Sparse inputs (:class:`~tensorkrylov.tensor.SparseTensor3`) are returned
    unchanged when ``allow_sparse`` is true.
    """
    from .tensor import SparseTensor3

    if isinstance(A, SparseTensor3):
        if not allow_sparse:
            raise TypeError(f"{name} must be a dense tensor")
        return A
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 3:
        raise ValueError(f"{name} must be a third-order tensor, got ndim={A.ndim}")
    if check_finite and not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return A


def check_vector(x, size, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {x.shape}")
    if x.shape[0] != size:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {size}")
    return x


def check_matrix(M, name="M"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[None, :]
    if M.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got shape {M.shape}")
    return M


def check_ranks(ranks, dims):
    """Validate a multilinear rank triple against tensor dimensions."""
    if isinstance(ranks, numbers.Integral):
        ranks = (ranks,) * 3
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != 3:
        raise ValueError(f"ranks must have three entries, got {ranks}")
    for mode, (r, d) in enumerate(zip(ranks, dims), start=1):
        if r < 0:
            raise ValueError(f"rank in mode {mode} must be non-negative, got {r}")
        if r > d:
            raise ValueError(f"rank {r} in mode {mode} exceeds dimension {d}")
    return ranks


def check_orthonormal(Q, tol=1e-8, name="factor"):
    """Raise ``ValueError`` unless ``Q`` has orthonormal columns within ``tol``."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got shape {Q.shape}")
    if Q.shape[1] == 0:
        return Q
    err = np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1])))
    if err > tol:
        raise ValueError(f"{name} columns are not orthonormal (max deviation {err:.3g})")
    return Q


def as_generator(random_state):
    """Turn ``None``, an int seed or a Generator into a ``numpy.random.Generator``."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)
