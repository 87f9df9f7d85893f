"""scikit-learn style estimator wrapping the Tucker approximation methods."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_ranks, check_tensor
from .krylov import (
    contracted_recursion,
    maximal_recursion,
    maximal_truncate,
    minimal_recursion,
    modified_minimal_recursion,
    optimized_recursion,
    small_mode_recursion,
)
from .tensor import frob_norm, ttm_multi
from .tucker import approx_error, core_project, hosvd_via_krylov, truncated_hosvd

METHODS = (
    "minimal",
    "modified",
    "maximal",
    "optimized",
    "small_mode",
    "contracted",
    "hosvd",
    "hosvd-krylov",
)


class KrylovTucker(BaseEstimator, TransformerMixin):
    """Low multilinear rank approximation ``A ~ (U, V, W) . C``.

    Parameters
    ----------
    ranks : int or tuple of three ints
        Target multilinear rank ``(p, q, r)``.
    method : str
        One of ``'minimal'``, ``'modified'``, ``'maximal'``,
        ``'optimized'``, ``'small_mode'``, ``'contracted'``, ``'hosvd'``,
        ``'hosvd-krylov'``. Cubical methods (minimal, optimized) use
        ``max(ranks)`` steps and keep the leading vectors of each basis.
    start : {'random', 'fibre-mean'}
        Starting vectors for the recursions.
    random_state : int, Generator or None
    tol : float
        Breakdown tolerance relative to ``||A||``.
    strategy : {'inner-krylov', 'exact-hosvd'}
        Optimization strategy of the optimized recursion.
    inner_steps, warmup : int
        Parameters of the optimized recursion.
    small_mode : int or None
        Mode with small dimension for ``method='small_mode'``; defaults to
        the mode with the smallest dimension.
    policy : {'cyclic', 'random', 'optimized'}
        Small-mode selection policy.
    oversample : int
        Extra working vectors per mode for ``'hosvd-krylov'`` and for the
        maximal recursion's truncation.

    Attributes
    ----------
    U_, V_, W_ : ndarray
        Orthonormal factors.
    core_ : ndarray
        Projected core ``<A; U, V, W>``.
    error_ : float
        ``||A - (U, V, W) . core||``.
    relative_error_ : float
    state_ : KrylovState or None
        Recursion state for the Krylov methods.
    """

    def __init__(self, ranks=10, method="minimal", start="random", random_state=None, tol=1e-12,
                 strategy="inner-krylov", inner_steps=3, warmup=4, small_mode=None,
                 policy="cyclic", oversample=0):
        self.ranks = ranks
        self.method = method
        self.start = start
        self.random_state = random_state
        self.tol = tol
        self.strategy = strategy
        self.inner_steps = inner_steps
        self.warmup = warmup
        self.small_mode = small_mode
        self.policy = policy
        self.oversample = oversample

    def _fit_factors(self, A, ranks):
        k = max(ranks)
        kw = dict(start=self.start, random_state=self.random_state, tol=self.tol)
        m = self.method
        if m == "minimal":
            state = minimal_recursion(A, min(k, min(A.shape)), **kw)
        elif m == "modified":
            state = modified_minimal_recursion(A, ranks, **kw)
        elif m == "optimized":
            state = optimized_recursion(A, min(k, min(A.shape)), strategy=self.strategy,
                                        inner_steps=self.inner_steps, warmup=self.warmup, **kw)
        elif m == "small_mode":
            small = self.small_mode or int(np.argmin(A.shape)) + 1
            state = small_mode_recursion(A, small, k, policy=self.policy, **kw)
        elif m == "maximal":
            limits = tuple(min(r + self.oversample, d) for r, d in zip(ranks, A.shape))
            state = maximal_recursion(A, start=self.start, limits=limits,
                                      random_state=self.random_state, tol=self.tol)
            if any(s < r for s, r in zip(state.sizes, ranks)):
                raise ValueError(
                    f"maximal recursion stopped at sizes {state.sizes}, below ranks {ranks}"
                )
            state = maximal_truncate(state, A, ranks)
        elif m == "contracted":
            state = contracted_recursion(A, ranks, start=self.start,
                                         random_state=self.random_state)
        else:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
        factors = [state.bases[mode].Q[:, :r] for mode, r in zip((1, 2, 3), ranks)]
        return factors, state

    def fit(self, X, y=None):
        """Compute the factors for tensor ``X`` (dense array or SparseTensor3)."""
        A = check_tensor(X)
        ranks = check_ranks(self.ranks, A.shape)
        if self.method == "hosvd":
            dec = truncated_hosvd(A, ranks)
            factors, core, state = list(dec.factors), dec.core, None
        elif self.method == "hosvd-krylov":
            dec = hosvd_via_krylov(A, ranks, oversample=self.oversample,
                                   start=self.start, random_state=self.random_state)
            factors, core, state = list(dec.factors), dec.core, None
        else:
            factors, state = self._fit_factors(A, ranks)
            core = core_project(A, *factors, check=False,
                                counter=state.counter if state is not None else None)
        self.U_, self.V_, self.W_ = factors
        self.core_ = core
        self.state_ = state
        self.norm_ = frob_norm(A)
        self.error_ = approx_error(A, core)
        self.relative_error_ = self.error_ / self.norm_ if self.norm_ else 0.0
        return self

    @property
    def factors_(self):
        check_is_fitted(self, "core_")
        return self.U_, self.V_, self.W_

    def transform(self, X):
        """Project ``X`` onto the fitted factors, returning the core."""
        check_is_fitted(self, "core_")
        A = check_tensor(X)
        return core_project(A, self.U_, self.V_, self.W_, check=False)

    def inverse_transform(self, C):
        """Map a core back to the full space: ``(U, V, W) . C``."""
        check_is_fitted(self, "core_")
        C = np.asarray(C, dtype=np.float64)
        return ttm_multi(C, [self.U_, self.V_, self.W_])

    def score(self, X, y=None):
        """Fraction of ``||X||^2`` captured by the fitted subspaces."""
        A = check_tensor(X)
        nA = frob_norm(A)
        if nA == 0:
            return 1.0
        return float(frob_norm(self.transform(A)) ** 2 / nA**2)
