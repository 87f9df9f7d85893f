"""Maximal tensor Krylov recursion and truncation of its bases.

Each loop generates, for one mode, a new vector from every pair of
vectors of the other two modes that has not been used for that mode
before. Pairs are consumed in lexicographic order. After every complete
loop the coefficient tensor ``H`` gives an exact factorization, e.g. after
a u-loop ``<A; V, W>_{-1} = H x_1 U``.
"""

import numpy as np

from .._validation import check_ranks
from ..tensor import matricize, ttm_multi
from .basis import CoeffTensor, OrthoBasis
from .minimal import Recursion, _init_state, other_modes
from .state import KrylovState, LoopRecord


def maximal_recursion(A, start="random", limits=None, max_loops=None, tol=1e-12,
                      random_state=None):
    """Run the maximal recursion until every basis reaches its size limit.

    Parameters
    ----------
    A : ndarray or SparseTensor3
    start : start policy or StartVectors
    limits : tuple of three ints, optional
        Maximum basis sizes (default: the tensor dimensions). A loop that
        would exceed a limit is cut short and recorded as incomplete; the
        other modes keep growing. The run also stops after three
        consecutive loops without growth.
    max_loops : int, optional
        Stop after this many complete or incomplete loops (the initial
        ``w_1`` step is not counted).

    Returns
    -------
    KrylovState
        ``state.loops`` lists the basis sizes at every loop boundary.
    """
    dims = A.shape
    limits = dims if limits is None else check_ranks(limits, dims)
    A, rng, start, state = _init_state(A, "maximal", start, limits, random_state, False)
    rec = Recursion(A, state, tol=tol, rng=rng, resolve=False)
    state.bases[1].append(start.u1)
    state.bases[2].append(start.v1)
    rec.generate(3, 0, 0)
    used = {1: set(), 2: set(), 3: {(0, 0)}}
    state.mark_step()

    loops = 0
    idle = 0
    stop = False
    while not stop and not all(state.bases[m].full for m in (1, 2, 3)):
        for mode in (1, 2, 3):
            if max_loops is not None and loops >= max_loops:
                stop = True
                break
            if state.bases[mode].full:
                continue
            rec.step += 1
            a, b = other_modes(mode)
            na, nb = state.bases[a].size, state.bases[b].size
            basis = state.bases[mode]
            complete = True
            grew = False
            for i in range(na):
                for j in range(nb):
                    if (i, j) in used[mode]:
                        continue
                    if basis.full:
                        complete = False
                        break
                    used[mode].add((i, j))
                    grew |= rec.generate(mode, i, j)
                if not complete:
                    break
            loops += 1
            state.mark_step()
            state.loops.append(LoopRecord(mode, state.sizes, complete))
            idle = 0 if grew else idle + 1
            if idle >= 3 or all(state.bases[m].full for m in (1, 2, 3)):
                stop = True
                break
    return state


def _dominant(M, p):
    u, _, _ = np.linalg.svd(M, full_matrices=False)
    return u[:, :p]


def maximal_truncate(state, A, target, max_other=None):
    """Reduce the bases of a maximal-recursion state to ``target`` sizes.

    For every mode whose basis exceeds its target, the projected tensor
    ``<A; V, W>_{-1}`` (for mode 1; analogous for the others) is formed with
    the full bases of the other two modes and the dominant ``p``-dimensional
    subspace of its mode-1 matricization inside ``span(U)`` is kept.

    Parameters
    ----------
    max_other : int, optional
        Memory bound: use at most this many vectors of each other mode when
        forming the projected tensor, choosing those whose slices of the
        stored coefficient tensor have the largest Frobenius norm.

    Returns
    -------
    KrylovState
        Bases of exactly the target sizes; ``H`` holds the full projected
        core ``<A; U, V, W>``.
    """
    sizes = state.sizes
    target = check_ranks(target, A.shape)
    for m, (s, t) in enumerate(zip(sizes, target), start=1):
        if t > s:
            raise ValueError(f"target {t} in mode {m} exceeds the available basis size {s}")
    full = {m: state.bases[m].Q for m in (1, 2, 3)}
    Hv = state.H.values
    new = {}
    for m in (1, 2, 3):
        Q = full[m]
        p = target[m - 1]
        if Q.shape[1] == p:
            new[m] = Q.copy()
            continue
        factors = [None, None, None]
        for o in other_modes(m):
            Qo = full[o]
            if max_other is not None and Qo.shape[1] > max_other:
                axes = tuple(ax for ax in range(3) if ax != o - 1)
                weight = np.sqrt((Hv[tuple(slice(0, s) for s in sizes)] ** 2).sum(axis=axes))
                keep = np.sort(np.argsort(-weight, kind="stable")[:max_other])
                Qo = Qo[:, keep]
            factors[o - 1] = Qo
        factors[m - 1] = Q
        C = ttm_multi(A, factors, transpose=True)
        new[m] = Q @ _dominant(matricize(C, m), p)
    out = KrylovState.empty("maximal-truncated", state.dims)
    for m in (1, 2, 3):
        out.bases[m] = OrthoBasis.from_matrix(m, new[m])
    core = ttm_multi(A, [new[1], new[2], new[3]], transpose=True)
    H = CoeffTensor(core.shape)
    H._data[tuple(slice(0, s) for s in core.shape)] = core
    H._mask[tuple(slice(0, s) for s in core.shape)] = True
    out.H = H
    out.counter = state.counter.copy()
    out.norm_A = state.norm_A
    out.meta = dict(state.meta, truncated_from=list(sizes), max_other=max_other)
    out.mark_step()
    return out
