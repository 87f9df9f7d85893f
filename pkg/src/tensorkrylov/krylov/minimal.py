"""Minimal tensor Krylov recursion and its modified and small-mode variants.

Each step produces one new vector per mode by contracting the tensor with
the most recent vectors of the other two modes::

    u_{i+1} ~ A(v_i, w_i),  v_{i+1} ~ A(u_{i+1}, w_i),  w_{i+1} ~ A(u_{i+1}, v_{i+1})

A mode whose basis is complete (its target size was reached, or it spans
the whole range of the tensor in that mode) no longer grows. Its
contribution to the other modes' contractions is then chosen by a
selection policy: a seeded random combination of its basis vectors, a
cyclic sweep through them, or the combination that maximizes the new
vector's norm.
"""

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .._validation import as_generator, check_mode, check_ranks, check_tensor
from ..tensor import frob_norm, tvv
from .basis import orthogonalize_append, random_orthogonal_unit
from .matrix import golub_kahan
from .state import BreakdownError, BreakdownEvent, KrylovState, Record, StartVectors

N_PROBES = 3


def other_modes(mode):
    return tuple(m for m in (1, 2, 3) if m != mode)


def _coords(src, size):
    if isinstance(src, (int, np.integer)):
        e = np.zeros(size)
        e[src] = 1.0
        return e
    return np.asarray(src, dtype=np.float64)


class Recursion:
    """Shared machinery: candidate generation, coefficient bookkeeping and
    breakdown handling for all tensor Krylov recursions.

    Parameters
    ----------
    on_complete : {'random', 'stop'}
        What to do when a mode is found to be complete: append a random
        vector orthogonal to the basis (keeps the requested size) or stop
        growing that mode.
    resolve : bool
        If False a breakdown simply leaves the basis unchanged; used where
        a vanishing candidate carries no information (maximal recursion).
    """

    def __init__(self, A, state, tol=1e-12, strict=False, rng=None, on_complete="random",
                 resolve=True):
        self.A = A
        self.state = state
        self.tol = tol
        self.strict = strict
        self.rng = as_generator(rng)
        self.on_complete = on_complete
        self.resolve = resolve
        self.scale = state.norm_A
        self.complete = {1: False, 2: False, 3: False}
        self.step = 0

    def vector(self, mode, src):
        """Basis vector (int index) or combination (coordinates) in ``mode``."""
        Q = self.state.bases[mode].Q
        if isinstance(src, (int, np.integer)):
            return Q[:, src]
        return Q[:, : len(src)] @ src

    def candidate(self, mode, src_a, src_b):
        a, b = other_modes(mode)
        return tvv(self.A, (a, b), self.vector(a, src_a), self.vector(b, src_b), self.state.counter)

    def generate(self, mode, src_a, src_b, cand=None):
        """Orthogonalize a candidate into ``mode``'s basis and record it.

        ``src_a`` and ``src_b`` identify the vectors of the two other modes
        (in increasing mode order) the candidate is built from: an int is a
        basis index, an array holds basis coordinates. ``cand`` may carry a
        precomputed ``tvv`` of those vectors.

        Returns True when the basis grew.
        """
        st = self.state
        a, b = other_modes(mode)
        if cand is None:
            cand = self.candidate(mode, src_a, src_b)
        basis = st.bases[mode]
        coeffs, nrm, ok = orthogonalize_append(basis, cand, tol=self.tol, scale=self.scale)
        full = np.append(coeffs, nrm if ok else 0.0)
        size_a, size_b = st.bases[a].size, st.bases[b].size
        st.records.append(Record(mode, _coords(src_a, size_a), _coords(src_b, size_b), full))
        if isinstance(src_a, (int, np.integer)) and isinstance(src_b, (int, np.integer)):
            n = len(full) if ok else len(coeffs)
            index = [None, None, None]
            index[mode - 1] = slice(0, n)
            index[a - 1], index[b - 1] = int(src_a), int(src_b)
            st.H.record(tuple(index), full[:n])
        if ok:
            return True
        return self.breakdown(mode, nrm)

    def breakdown(self, mode, residual):
        st = self.state
        if self.strict:
            raise BreakdownError(
                f"breakdown in mode {mode} at step {self.step} (residual {residual:.3g})"
            )
        basis = st.bases[mode]
        if not self.resolve:
            st.meta["pair_breakdowns"] = st.meta.get("pair_breakdowns", 0) + 1
            return False
        if basis.full:
            self.complete[mode] = True
            st.events.append(BreakdownEvent(mode, self.step, float(residual), "subspace-complete"))
            return False
        a, b = other_modes(mode)
        for _ in range(N_PROBES):
            x = self.rng.standard_normal(st.dims[a - 1])
            y = self.rng.standard_normal(st.dims[b - 1])
            probe = tvv(self.A, (a, b), x / np.linalg.norm(x), y / np.linalg.norm(y), st.counter)
            _, _, ok = orthogonalize_append(basis, probe, tol=self.tol, scale=self.scale)
            if ok:
                st.events.append(
                    BreakdownEvent(mode, self.step, float(residual), "random-replacement")
                )
                return True
        st.events.append(BreakdownEvent(mode, self.step, float(residual), "subspace-complete"))
        self.complete[mode] = True
        if self.on_complete == "random":
            basis.append(random_orthogonal_unit(basis, self.rng))
            return True
        return False


def _init_state(A, method, start, capacities, random_state, with_w):
    A = check_tensor(A)
    rng = as_generator(random_state)
    start = StartVectors.make(A, start, rng, with_w=with_w)
    for name, d in zip(("u1", "v1"), A.shape[:2]):
        if getattr(start, name).shape[0] != d:
            raise ValueError(f"start vector {name} has length {getattr(start, name).shape[0]}, expected {d}")
    state = KrylovState.empty(method, A.shape, capacities, norm_A=frob_norm(A))
    state.meta["start"] = start.provenance
    return A, rng, start, state


class _Selector:
    """Chooses the vector an exhausted mode contributes at each step."""

    def __init__(self, policy, rng, rec):
        self.policy = policy
        self.rng = rng
        self.rec = rec
        self.cache = {}
        self.turn = {1: 0, 2: 0, 3: 0}
        self.history = {1: [], 2: [], 3: []}

    def per_step(self, mode, step):
        key = (mode, step)
        if key not in self.cache:
            size = self.rec.state.bases[mode].size
            if self.policy == "cyclic":
                idx = self.turn[mode] % size
                self.turn[mode] += 1
                self.history[mode].append(idx)
                self.cache[key] = idx
            else:
                c = self.rng.standard_normal(size)
                self.cache[key] = c / np.linalg.norm(c)
        return self.cache[key]

    def optimized(self, small, gen_mode, other, other_src):
        """Combination of the small-mode basis maximizing the new vector's norm.

        Solves ``max ||P A(U_s theta, x)||`` over unit ``theta`` by
        Golub-Kahan bidiagonalization of the matrix-free operator
        ``theta -> P A(U_s theta, x)``, where ``P`` projects out the basis of
        the mode being generated.
        """
        rec = self.rec
        A = rec.A
        counter = rec.state.counter
        Qs = rec.state.bases[small].Q
        target = rec.state.bases[gen_mode]
        x = rec.vector(other, other_src)
        s = Qs.shape[1]

        def mv(theta):
            return target.project_out(
                tvv(A, (small, other), Qs @ np.ravel(theta), x, counter)
            )

        def rmv(y):
            return Qs.T @ tvv(A, (gen_mode, other), target.project_out(np.ravel(y)), x, counter)

        op = LinearOperator((target.dim, s), matvec=mv, rmatvec=rmv, dtype=np.float64)
        start = mv(np.full(s, 1.0 / np.sqrt(s)))
        nrm = np.linalg.norm(start)
        if nrm == 0:
            return self.per_step(small, rec.step)
        gk = golub_kahan(op, start / nrm, s)
        if gk.V.shape[1] == 0:
            return self.per_step(small, rec.step)
        _, _, vt = np.linalg.svd(gk.B)
        theta = gk.V @ vt[0]
        self.history[small].append(theta)
        return theta


def _run(A, method, start, targets, *, variant="latest", policy="random", tol=1e-12,
         strict=False, random_state=None, on_complete="random"):
    with_w = variant == "parallel"
    A, rng, start, state = _init_state(A, method, start, targets, random_state, with_w)
    rec = Recursion(A, state, tol=tol, strict=strict, rng=rng, on_complete=on_complete)
    comb_seed = int(rng.integers(2**32))
    state.meta.update(variant=variant, policy=policy, combination_seed=comb_seed)
    selector = _Selector(policy, np.random.default_rng(comb_seed), rec)

    state.bases[1].append(start.u1)
    state.bases[2].append(start.v1)
    if variant == "parallel":
        if start.w1 is None:
            raise ValueError("the parallel variant needs a start vector w1")
        state.bases[3].append(start.w1)
    else:
        rec.generate(3, 0, 0)
    state.mark_step()

    def active(m):
        return state.bases[m].size < targets[m - 1] and not (
            rec.complete[m] and on_complete == "stop"
        )

    while any(active(m) for m in (1, 2, 3)):
        rec.step += 1
        exhausted = {m for m in (1, 2, 3) if not active(m)}
        snapshot = {m: state.bases[m].size - 1 for m in (1, 2, 3)}
        before = state.sizes
        for m in (1, 2, 3):
            if not active(m):
                continue
            srcs = []
            for o in other_modes(m):
                if o not in exhausted:
                    srcs.append(snapshot[o] if variant == "parallel" else state.bases[o].size - 1)
                elif policy == "optimized" and len(exhausted & set(other_modes(m))) == 1:
                    srcs.append(None)
                else:
                    srcs.append(selector.per_step(o, rec.step))
            holes = [i for i, src in enumerate(srcs) if src is None]
            if holes:
                o_ex = holes[0]
                ex_mode = other_modes(m)[o_ex]
                fresh_mode = other_modes(m)[1 - o_ex]
                srcs[o_ex] = selector.optimized(ex_mode, m, fresh_mode, srcs[1 - o_ex])
            rec.generate(m, srcs[0], srcs[1])
        state.mark_step()
        if state.sizes == before and not any(active(m) for m in (1, 2, 3)):
            break
    state.meta["selections"] = {
        str(m): [int(i) for i in h if np.ndim(i) == 0] for m, h in selector.history.items()
    }
    return state


def minimal_recursion(A, k, start="random", variant="latest", tol=1e-12, strict=False,
                      random_state=None):
    """Run ``k - 1`` steps of the minimal tensor Krylov recursion.

    Parameters
    ----------
    A : ndarray or SparseTensor3
    k : int
        Number of vectors per mode.
    start : {'random', 'fibre-mean'}, StartVectors or tuple of vectors
    variant : {'latest', 'parallel'}
        ``'latest'`` uses the newest vectors (``v_{i+1}`` is built from
        ``u_{i+1}``); ``'parallel'`` builds all three new vectors from the
        step-``i`` vectors and needs a start ``w1`` (drawn at random when the
        start policy does not supply one).
    tol : float
        Breakdown tolerance relative to ``||A||``.
    strict : bool
        Raise :class:`BreakdownError` instead of resolving breakdowns.

    Returns
    -------
    KrylovState
    """
    A = check_tensor(A)
    if k < 1 or k > min(A.shape):
        raise ValueError(f"k must be between 1 and {min(A.shape)}, got {k}")
    if variant not in ("latest", "parallel"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "parallel" and isinstance(start, StartVectors) and start.w1 is None:
        start = StartVectors(start.u1, start.v1, as_generator(random_state).standard_normal(A.shape[2]),
                             start.provenance)
    return _run(A, "minimal", start, (k, k, k), variant=variant, tol=tol, strict=strict,
                random_state=random_state)


def modified_minimal_recursion(A, target, start="random", tol=1e-12, strict=False,
                               random_state=None):
    """Minimal recursion that stops each mode at its own target size.

    Modes that reached their target (or turned out to be complete)
    contribute seeded random combinations of their basis vectors; the seed
    is stored in ``state.meta['combination_seed']``.
    """
    A = check_tensor(A)
    target = check_ranks(target, A.shape)
    if min(target) < 1:
        raise ValueError(f"target sizes must be positive, got {target}")
    return _run(A, "modified", start, target, policy="random", tol=tol, strict=strict,
                random_state=random_state, on_complete="stop")


def small_mode_recursion(A, small, k, policy="cyclic", start="random", tol=1e-12,
                         strict=False, random_state=None):
    """Minimal recursion for a tensor with one small mode.

    The basis of mode ``small`` is completed at its dimension; afterwards
    the other two modes keep growing to ``k`` vectors and the small-mode
    vector used in each contraction is picked by ``policy``:

    ``'cyclic'``
        ``u_1, u_2, ..., u_l, u_1, ...``, one per step.
    ``'random'``
        A seeded random combination of the small-mode basis, one per step.
    ``'optimized'``
        For every new vector, the unit combination that maximizes its norm
        after orthogonalization (a best rank-1 problem solved matrix-free).
    """
    A = check_tensor(A)
    small = check_mode(small)
    if policy not in ("cyclic", "random", "optimized"):
        raise ValueError(f"unknown small-mode policy {policy!r}")
    d = A.shape[small - 1]
    if d >= k:
        raise ValueError(f"mode {small} has dimension {d}, not smaller than k={k}")
    targets = [k, k, k]
    targets[small - 1] = d
    check_ranks(targets, A.shape)
    state = _run(A, "small_mode", start, tuple(targets), policy=policy, tol=tol, strict=strict,
                 random_state=random_state, on_complete="stop")
    state.meta["small_mode"] = small
    return state
