"""Synthetic test tensors."""

import numpy as np

from .._validation import as_generator, check_ranks
from ..tensor import SparseTensor3, gram, ttm_multi

DISTRIBUTIONS = ("normal", "uniform", "ones")


def random_orthonormal(d, r, rng):
    Q, _ = np.linalg.qr(rng.standard_normal((d, r)))
    return Q


def gen_low_rank(dims, ranks, seed=None, max_tries=10):
    """Dense tensor ``A = (X, Y, Z) . C`` of multilinear rank ``ranks``.

    ``X, Y, Z`` have random orthonormal columns and ``C`` has standard
    normal entries. The core is redrawn if any of its mode Gram matrices
    has an eigenvalue gap below ``1e-6`` (relative), so the rank is exact.

    Returns
    -------
    A : ndarray
    factors : tuple of ndarray
        Ground-truth ``(X, Y, Z)``.
    core : ndarray
    """
    dims = tuple(int(d) for d in dims)
    ranks = check_ranks(ranks, dims)
    rng = as_generator(seed)
    for _ in range(max_tries):
        C = rng.standard_normal(ranks)
        if min(ranks) == 0:
            break
        smallest = []
        for mode in (1, 2, 3):
            vals = np.linalg.eigvalsh(gram(C, mode))
            smallest.append(vals[0] / vals[-1])
        if min(smallest) > 1e-6:
            break
    else:
        raise RuntimeError("could not draw a full-rank core")
    factors = tuple(random_orthonormal(d, r, rng) for d, r in zip(dims, ranks))
    return ttm_multi(C, list(factors)), factors, C


def gen_gaussian(dims, seed=None):
    """Dense tensor with independent standard normal entries."""
    return as_generator(seed).standard_normal(tuple(int(d) for d in dims))


def _values(rng, size, distribution):
    if distribution == "normal":
        v = rng.standard_normal(size)
        v[v == 0] = 1.0
        return v
    if distribution == "uniform":
        return 1.0 - rng.random(size)  # (0, 1]
    if distribution == "ones":
        return np.ones(size)
    raise ValueError(f"unknown distribution {distribution!r}; expected one of {DISTRIBUTIONS}")


def gen_sparse(dims, nnz, seed=None, distribution="normal", single_per_tube=False):
    """Random sparse tensor with exactly ``nnz`` distinct stored entries.

    With ``single_per_tube`` every mode-3 fibre ``A(i, j, :)`` holds at
    most one nonzero, which makes ``<A, A>_{-3}`` diagonal.
    """
    l, m, n = dims = tuple(int(d) for d in dims)
    nnz = int(nnz)
    rng = as_generator(seed)
    cap = l * m if single_per_tube else l * m * n
    if nnz < 0 or nnz > cap:
        what = "mode-3 fibres" if single_per_tube else "entries"
        raise ValueError(f"cannot place {nnz} nonzeros: the tensor has only {cap} {what}")
    if single_per_tube:
        tubes = rng.choice(l * m, size=nnz, replace=False)
        i, j = tubes % l, tubes // l
        k = rng.integers(0, n, size=nnz)
    else:
        lin = rng.choice(l * m * n, size=nnz, replace=False)
        i, j, k = lin % l, (lin // l) % m, lin // (l * m)
    vals = _values(rng, nnz, distribution)
    return SparseTensor3(np.column_stack([i, j, k]), vals, dims, duplicates="error")
