"""Tucker approximations: core projection, HOSVD and Krylov-accelerated HOSVD."""

import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_generator, check_orthonormal, check_ranks, check_tensor
from .counter import OpCounter
from .rank1 import Rank1Triple, best_rank111
from .tensor import SparseTensor3, frob_norm, gram, ttm_multi

__all__ = [
    "TuckerDecomp",
    "Rank1Triple",
    "core_project",
    "approx_error",
    "truncated_hosvd",
    "hosvd_via_krylov",
    "best_rank111",
    "load_tucker",
]

#: frontal slices processed together when projecting a sparse tensor
_SLICE_BLOCK = 256


@dataclass
class TuckerDecomp:
    """``A ~ (U, V, W) . core`` with orthonormal factors."""

    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    core: np.ndarray
    method: str = ""
    error: float = float("nan")
    counter: OpCounter = field(default_factory=OpCounter)
    meta: dict = field(default_factory=dict)

    @property
    def factors(self):
        return self.U, self.V, self.W

    @property
    def ranks(self):
        return self.core.shape

    def reconstruct(self):
        return ttm_multi(self.core, [self.U, self.V, self.W])

    def save(self, path):
        meta = {
            "kind": "tucker",
            "method": self.method,
            "error": self.error,
            "ranks": list(self.ranks),
            "counter": self.counter.to_dict(),
            "meta": self.meta,
        }
        np.savez_compressed(path, meta=np.array(json.dumps(meta)), U=self.U, V=self.V, W=self.W,
                            core=self.core)


def load_tucker(path):
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("kind") != "tucker":
            raise ValueError(f"{path} is not a Tucker archive")
        return TuckerDecomp(z["U"], z["V"], z["W"], z["core"], meta["method"], meta["error"],
                            OpCounter(**meta["counter"]), meta["meta"])


def _sparse_core(A, U, V, W):
    """``<A; U, V, W>`` slice by slice, touching only stored entries."""
    l, m, n = A.shape
    p, q, r = U.shape[1], V.shape[1], W.shape[1]
    core = np.zeros((p, q, r))
    ptr = A.slice_ptr
    i_all, j_all, vals = A.mode_coords(1), A.mode_coords(2), A.values
    for k0 in range(0, n, _SLICE_BLOCK):
        k1 = min(n, k0 + _SLICE_BLOCK)
        T = np.zeros((k1 - k0, p, q))
        for k in range(k0, k1):
            lo, hi = ptr[k], ptr[k + 1]
            if lo == hi:
                continue
            i, j, v = i_all[lo:hi], j_all[lo:hi], vals[lo:hi]
            rows, inv = np.unique(i, return_inverse=True)
            # (A_k V) restricted to the nonzero rows of the slice
            AV = np.zeros((rows.size, q))
            np.add.at(AV, inv, v[:, None] * V[j])
            T[k - k0] = U[rows].T @ AV
        core += np.tensordot(T, W[k0:k1], axes=(0, 0))
    return core


def core_project(A, U, V, W, check=True, counter=None):
    """Optimal core ``<A; U, V, W>`` for orthonormal factors.

    ``(U, V, W) . S`` with ``S`` the returned core is the closest tensor to
    ``A`` among all tensors with these factors. The counter is charged
    ``p * q`` tvv-equivalents (one tvv per pair of mode-1 and mode-2 vectors).
    """
    A = check_tensor(A)
    factors = [np.asarray(F, dtype=np.float64) for F in (U, V, W)]
    for mode, (F, d) in enumerate(zip(factors, A.shape), start=1):
        if F.ndim != 2 or F.shape[0] != d:
            raise ValueError(f"mode-{mode} factor has shape {F.shape}, expected ({d}, r)")
        if check:
            check_orthonormal(F, 1e-8, f"mode-{mode} factor")
    if counter is not None:
        counter.tvv += factors[0].shape[1] * factors[1].shape[1]
    if isinstance(A, SparseTensor3):
        return _sparse_core(A, *factors)
    # contract the mode with the largest reduction first
    order = sorted(range(3), key=lambda ax: factors[ax].shape[1] / A.shape[ax])
    out = A
    for ax in order:
        out = ttm_multi(out, {ax + 1: factors[ax]}, transpose=True)
    return out


def approx_error(A, core):
    """``||A - (U, V, W) . core||`` from ``||A||^2 - ||core||^2``.

    Valid when ``core`` was obtained by :func:`core_project` with
    orthonormal factors; the approximation itself is never formed.
    """
    nA = frob_norm(A)
    nC = frob_norm(core) if np.size(core) else 0.0
    if nC > nA * (1 + 1e-10):
        raise ValueError(
            f"core norm {nC:.6g} exceeds tensor norm {nA:.6g}; factors are not orthonormal "
            "or the core was not obtained by projection"
        )
    return float(np.sqrt(max(0.0, nA**2 - nC**2)))


def _normalize_signs(F):
    if F.shape[1] == 0:
        return F
    idx = np.argmax(np.abs(F), axis=0)
    signs = np.sign(F[idx, np.arange(F.shape[1])])
    signs[signs == 0] = 1.0
    return F * signs


def _leading_eigvecs(G, r):
    vals, vecs = np.linalg.eigh(G)
    order = np.argsort(vals, kind="stable")[::-1][:r]
    return _normalize_signs(vecs[:, order]), vals[order]


def truncated_hosvd(A, ranks, counter=None):
    """Truncated HOSVD from the eigenvectors of the mode Gram matrices.

    Factor columns are ordered by decreasing eigenvalue (squared mode
    singular value) and sign-normalized so that each column's largest
    entry in magnitude is positive.
    """
    A = check_tensor(A)
    ranks = check_ranks(ranks, A.shape)
    factors, spectra = [], []
    for mode, r in enumerate(ranks, start=1):
        F, vals = _leading_eigvecs(gram(A, mode), r)
        factors.append(F)
        spectra.append(vals.tolist())
    core = core_project(A, *factors, check=False, counter=counter)
    return TuckerDecomp(*factors, core, "hosvd", approx_error(A, core),
                        counter if counter is not None else OpCounter(),
                        {"eigenvalues": spectra})


def hosvd_via_krylov(A, ranks, oversample=0, start="fibre-mean", random_state=None,
                     counter=None):
    """HOSVD of a low multilinear rank tensor through a Krylov factorization.

    The modified minimal recursion builds bases ``U_p, V_q, W_r`` of the
    working sizes ``ranks + oversample``; the HOSVD of the small core
    ``<A; U_p, V_q, W_r>`` then gives ``U_p Ubar``, ``V_q Vbar``,
    ``W_r Wbar``. For tensors of exactly the requested multilinear rank
    the result spans the same subspaces as :func:`truncated_hosvd`.
    """
    from .krylov.minimal import modified_minimal_recursion

    A = check_tensor(A)
    ranks = check_ranks(ranks, A.shape)
    work = tuple(min(r + oversample, d) for r, d in zip(ranks, A.shape))
    rng = as_generator(random_state)
    state = modified_minimal_recursion(A, work, start=start, random_state=rng)
    C = core_project(A, *state.factors, check=False, counter=state.counter)
    # a basis that stopped short spans its whole mode subspace
    avail = tuple(min(r, s) for r, s in zip(ranks, C.shape))
    small = truncated_hosvd(C, avail)
    factors = [Q @ F for Q, F in zip(state.factors, small.factors)]
    for m, (r, a) in enumerate(zip(ranks, avail)):
        if a < r:
            factors[m] = _complete_basis(factors[m], r, rng)
    core = np.zeros(ranks)
    core[: avail[0], : avail[1], : avail[2]] = small.core
    if counter is not None:
        counter.add(state.counter)
    return TuckerDecomp(*factors, core, "hosvd-krylov", approx_error(A, core), state.counter,
                        {"working_ranks": list(work), "breakdowns": len(state.events),
                         "padded": [r - a for r, a in zip(ranks, avail)]})


def _complete_basis(F, r, rng):
    """Extend orthonormal columns ``F`` to ``r`` columns with random complement vectors."""
    X = rng.standard_normal((F.shape[0], r - F.shape[1]))
    for _ in range(2):
        X -= F @ (F.T @ X)
    Q, _ = np.linalg.qr(X)
    return np.hstack([F, Q])
