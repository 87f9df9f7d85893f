"""Optimized minimal recursion.

Instead of contracting with the latest vectors, each new vector in mode
``m`` is built from the combinations ``Q_a theta`` and ``Q_b eta`` of the
current bases of the other two modes that maximize the norm of the new
vector after orthogonalization::

    max_{|theta| = |eta| = 1} || P_m A(Q_a theta, Q_b eta) ||,   P_m = I - Q_m Q_m^T

This is a best rank-(1,1,1) problem for ``C = <A; Q_a, Q_b, P_m>``. The
``'exact-hosvd'`` strategy forms ``C`` explicitly; ``'inner-krylov'`` runs
a few minimal-recursion steps on ``C`` without forming it and solves the
small problem on the resulting ``t x t x t`` core.
"""

from dataclasses import dataclass

import numpy as np

from .._validation import check_tensor
from ..rank1 import best_rank111
from ..tensor import tvv
from .basis import OrthoBasis, orthogonalize_append
from .minimal import Recursion, _init_state, other_modes

STRATEGIES = ("exact-hosvd", "inner-krylov")


@dataclass
class OptimizedCandidate:
    """Result of one optimized step.

    ``x`` and ``y`` are the chosen combinations in basis coordinates of the
    two contracted modes, ``cand`` is the raw ``tvv`` of those vectors,
    ``objective`` its norm after projection and ``plain`` the projected norm
    of the plain candidate built from the latest vectors.
    """

    x: np.ndarray
    y: np.ndarray
    cand: np.ndarray
    objective: float
    plain: float


def _last(n):
    e = np.zeros(n)
    e[-1] = 1.0
    return e


def _exact(A, Qa, Qb, basis, modes, counter):
    a, b = modes
    na, nb = Qa.shape[1], Qb.shape[1]
    T = np.empty((na, nb, basis.dim))
    for i in range(na):
        for j in range(nb):
            T[i, j] = tvv(A, (a, b), Qa[:, i], Qb[:, j], counter)
    Qm = basis.Q
    C = T - (T @ Qm) @ Qm.T if Qm.shape[1] else T
    plain = float(np.linalg.norm(C[-1, -1]))
    sol = best_rank111(C)
    if sol.sigma < plain:
        sol = best_rank111(C, init=(_last(na), _last(nb)))
    return sol.theta, sol.eta, np.einsum("a,b,abk->k", sol.theta, sol.eta, T), plain


def _inner_krylov(A, Qa, Qb, basis, mode, modes, t, counter, tol):
    """Implicit ``t``-step minimal recursion on ``C = <A; Q_a, Q_b, P_m>``."""
    a, b = modes
    na, nb = Qa.shape[1], Qb.shape[1]
    if na < t or nb < t or basis.dim - basis.size < t:
        return None
    theta = OrthoBasis(a, na, t)
    eta = OrthoBasis(b, nb, t)
    omega = OrthoBasis(mode, basis.dim, t)
    theta.append(_last(na))
    eta.append(_last(nb))
    raw = {}

    def contract(i, j):
        if (i, j) not in raw:
            raw[i, j] = tvv(A, (a, b), Qa @ theta.Q[:, i], Qb @ eta.Q[:, j], counter)
        return raw[i, j]

    plain_vec = basis.project_out(contract(0, 0))
    plain = float(np.linalg.norm(plain_vec))
    scale = plain if plain > 0 else 1.0
    if not orthogonalize_append(omega, plain_vec, tol=tol, scale=scale)[2]:
        return None
    for s in range(t - 1):
        w_s = omega.Q[:, s]
        th = Qa.T @ tvv(A, (b, mode), Qb @ eta.Q[:, s], w_s, counter)
        if not orthogonalize_append(theta, th, tol=tol, scale=scale)[2]:
            return None
        et = Qb.T @ tvv(A, (a, mode), Qa @ theta.Q[:, s + 1], w_s, counter)
        if not orthogonalize_append(eta, et, tol=tol, scale=scale)[2]:
            return None
        om = basis.project_out(contract(s + 1, s + 1))
        if not orthogonalize_append(omega, om, tol=tol, scale=scale)[2]:
            return None
    T = np.empty((t, t, basis.dim))
    for i in range(t):
        for j in range(t):
            T[i, j] = contract(i, j)
    S = T @ omega.Q
    sol = best_rank111(S)
    if sol.sigma < plain:
        sol = best_rank111(S, init=(np.eye(t)[0], np.eye(t)[0]))
    cand = np.einsum("a,b,abk->k", sol.theta, sol.eta, T)
    return theta.Q @ sol.theta, eta.Q @ sol.eta, cand, plain


def optimized_candidate(A, bases, mode, strategy="exact-hosvd", inner_steps=3, counter=None,
                        tol=1e-12):
    """Compute the optimized next vector for ``mode`` from the current bases.

    Parameters
    ----------
    A : ndarray or SparseTensor3
    bases : dict
        Mode -> :class:`OrthoBasis`; the bases of the two other modes supply
        the combinations, the basis of ``mode`` defines the projector.
    strategy : {'exact-hosvd', 'inner-krylov'}

    Returns
    -------
    OptimizedCandidate or None
        None when the inner recursion broke down; callers then fall back to
        the plain candidate.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    A = check_tensor(A)
    modes = other_modes(mode)
    Qa, Qb = bases[modes[0]].Q, bases[modes[1]].Q
    basis = bases[mode]
    if strategy == "exact-hosvd":
        out = _exact(A, Qa, Qb, basis, modes, counter)
    else:
        out = _inner_krylov(A, Qa, Qb, basis, mode, modes, inner_steps, counter, tol)
        if out is None:
            return None
    x, y, cand, plain = out
    objective = float(np.linalg.norm(basis.project_out(cand)))
    return OptimizedCandidate(x, y, cand, objective, plain)


def optimized_recursion(A, k, start="random", strategy="inner-krylov", inner_steps=3, warmup=4,
                        tol=1e-12, strict=False, random_state=None):
    """Minimal recursion with optimized combinations after a warm-up phase.

    Parameters
    ----------
    A : ndarray or SparseTensor3
    k : int
        Number of vectors per mode.
    strategy : {'exact-hosvd', 'inner-krylov'}
    inner_steps : int
        Steps ``t`` of the inner recursion for ``'inner-krylov'``.
    warmup : int
        The first ``warmup`` steps are plain minimal-recursion steps.

    Returns
    -------
    KrylovState
        ``state.meta['fallbacks']`` counts vectors for which the inner
        recursion broke down and the plain candidate was used.
    """
    A = check_tensor(A)
    if k < 1 or k > min(A.shape):
        raise ValueError(f"k must be between 1 and {min(A.shape)}, got {k}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    A, rng, start, state = _init_state(A, "optimized", start, (k, k, k), random_state, False)
    rec = Recursion(A, state, tol=tol, strict=strict, rng=rng)
    state.meta.update(strategy=strategy, inner_steps=inner_steps, warmup=warmup, fallbacks=0)
    state.bases[1].append(start.u1)
    state.bases[2].append(start.v1)
    rec.generate(3, 0, 0)
    state.mark_step()
    for i in range(1, k):
        rec.step = i
        for mode in (1, 2, 3):
            if i > warmup:
                opt = optimized_candidate(A, state.bases, mode, strategy, inner_steps,
                                          state.counter, tol)
                if opt is not None:
                    rec.generate(mode, opt.x, opt.y, cand=opt.cand)
                    continue
                state.meta["fallbacks"] += 1
            a, b = other_modes(mode)
            rec.generate(mode, state.bases[a].size - 1, state.bases[b].size - 1)
        state.mark_step()
    return state
