"""Krylov subspaces of the contracted products ``<A, A>_{-k}``.

Running symmetric Lanczos on the mode-``k`` Gram matrix spans the same
subspaces as the leading eigenvectors of that matrix, i.e. the truncated
HOSVD factors, without ever forming the Gram matrix of a large mode.
"""

import numpy as np

from .._validation import as_generator, check_mode, check_tensor
from ..counter import OpCounter
from ..tensor import SparseTensor3, fibre_mean, frob_norm, gram, gram_matvec
from .basis import OrthoBasis
from .matrix import lanczos
from .state import KrylovState, StartVectors

#: modes of at most this dimension may use an explicitly formed Gram matrix
GRAM_THRESHOLD = 4096


def contracted_lanczos(A, mode, k, start=None, explicit_gram=None, tol=1e-10, counter=None):
    """Lanczos on ``<A, A>_{-mode}`` applied through Gram matrix-vector products.

    Parameters
    ----------
    A : ndarray or SparseTensor3
    mode : int
    k : int
        Number of Lanczos vectors.
    start : array_like, optional
        Unit start vector; defaults to the normalized mode fibre mean.
    explicit_gram : bool, optional
        Form the Gram matrix once instead of applying it matrix-free. By
        default this is done for mode 3 when its dimension is at most
        :data:`GRAM_THRESHOLD`. Every operator application is counted as one
        Gram matrix-vector product either way.

    Returns
    -------
    LanczosResult
        Orthonormal basis ``Q``, tridiagonal coefficients and a breakdown
        flag (an invariant subspace was reached before ``k`` vectors).
    """
    A = check_tensor(A)
    mode = check_mode(mode)
    d = A.shape[mode - 1]
    if k < 1 or k > d:
        raise ValueError(f"k must be between 1 and {d}, got {k}")
    if start is None:
        start = fibre_mean(A, mode)
        nrm = np.linalg.norm(start)
        if nrm == 0:
            raise ValueError(f"mode-{mode} fibre mean is zero; supply a start vector")
        start = start / nrm
    if explicit_gram is None:
        explicit_gram = mode == 3 and d <= GRAM_THRESHOLD
    counter = counter if counter is not None else OpCounter()
    if explicit_gram:
        G = gram(A, mode)

        def matvec(x):
            counter.gram_matvec += 1
            return G @ x
    else:
        def matvec(x):
            return gram_matvec(A, mode, x, counter)

    return lanczos(matvec, start, k, tol=tol)


def contracted_recursion(A, k, start="fibre-mean", explicit_gram=None, tol=1e-10,
                         random_state=None):
    """Lanczos in all three modes; returns the bases as a :class:`KrylovState`.

    ``k`` is an int or a per-mode triple. The per-step cost log treats the
    ``j``-th Lanczos step of every mode as one step.
    """
    A = check_tensor(A)
    ks = (k,) * 3 if np.ndim(k) == 0 else tuple(int(x) for x in k)
    rng = as_generator(random_state)
    state = KrylovState.empty("contracted", A.shape, norm_A=frob_norm(A))
    sv = None if start == "fibre-mean" else StartVectors.make(A, start, rng, with_w=True)
    results = {}
    for m in (1, 2, 3):
        q1 = None if sv is None else getattr(sv, ("u1", "v1", "w1")[m - 1])
        if sv is not None and q1 is None:
            raise ValueError("contracted recursion needs a start vector in every mode")
        results[m] = contracted_lanczos(A, m, ks[m - 1], start=q1, explicit_gram=explicit_gram,
                                        tol=tol, counter=state.counter)
        state.bases[m] = OrthoBasis.from_matrix(m, results[m].Q)
    state.meta.update(
        start=start if isinstance(start, str) else "user",
        breakdown={str(m): bool(results[m].breakdown) for m in (1, 2, 3)},
        sparse=isinstance(A, SparseTensor3),
    )
    steps = max(ks)
    for j in range(1, steps + 1):
        sizes = tuple(min(j, results[m].Q.shape[1]) for m in (1, 2, 3))
        state.step_sizes.append(sizes)
        state.step_tvv.append(2 * sum(sizes))
    state.H.grow(state.sizes)
    return state
