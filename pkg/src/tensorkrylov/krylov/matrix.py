"""Matrix Krylov procedures: Arnoldi, Golub-Kahan and symmetric Lanczos.

All three use full reorthogonalization (two classical Gram-Schmidt passes)
and stop early with ``breakdown=True`` when a new vector vanishes.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import aslinearoperator

from .basis import OrthoBasis, orthogonalize_append


@dataclass
class ArnoldiResult:
    """Arnoldi factorization ``A U[:, :j] = U H``.

    Without breakdown ``U`` has ``k + 1`` columns and ``H`` is the
    ``(k + 1) x k`` upper Hessenberg matrix. After a breakdown at step
    ``j`` the factorization is square: ``U`` is ``n x j`` and ``H`` is
    ``j x j`` with ``A U = U H``.
    """

    U: np.ndarray
    H: np.ndarray
    breakdown: bool


@dataclass
class GolubKahanResult:
    """Lower bidiagonalization ``A V = U B`` and ``A^T U[:, :j] = V B[:j].T``.

    ``B`` is lower bidiagonal with ``alpha`` on the diagonal and ``beta`` on
    the subdiagonal. Without breakdown it is ``(k + 1) x k``. If ``A v_j``
    falls into the span of ``U`` the factorization closes with a square
    ``j x j`` matrix; if ``A^T u_j`` falls into the span of ``V`` it is
    ``j x (j - 1)``.
    """

    U: np.ndarray
    V: np.ndarray
    B: np.ndarray
    breakdown: bool

    @property
    def alpha(self):
        return np.diag(self.B).copy()

    @property
    def beta(self):
        return np.diag(self.B, -1).copy()


@dataclass
class LanczosResult:
    """Symmetric Lanczos basis ``Q`` and tridiagonal coefficients."""

    Q: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    breakdown: bool

    @property
    def T(self):
        """Tridiagonal ``Q^T G Q`` of size ``j x j``."""
        j = len(self.alpha)
        off = self.beta[: j - 1]
        return np.diag(self.alpha) + np.diag(off, 1) + np.diag(off, -1)


def _unit(x, name):
    x = np.asarray(x, dtype=np.float64).ravel()
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ValueError(f"{name} must be nonzero")
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"{name} must have unit norm (got {nrm:.3g})")
    return x


def arnoldi(Amat, u1, k, tol=1e-12):
    """Run ``k`` Arnoldi steps on a square matrix or linear operator."""
    op = aslinearoperator(Amat)
    n = op.shape[0]
    if op.shape[1] != n:
        raise ValueError(f"Arnoldi needs a square operator, got shape {op.shape}")
    u1 = _unit(u1, "u1")
    basis = OrthoBasis(1, n, capacity=min(k + 1, n))
    basis.append(u1)
    H = np.zeros((k + 1, k))
    scale = 0.0
    for i in range(k):
        w = op.matvec(basis.Q[:, i])
        scale = max(scale, float(np.linalg.norm(w)))
        coeffs, nrm, ok = orthogonalize_append(basis, w, tol=tol, scale=scale)
        H[: i + 1, i] = coeffs
        if not ok:
            return ArnoldiResult(basis.Q.copy(), H[: i + 1, : i + 1], True)
        H[i + 1, i] = nrm
    return ArnoldiResult(basis.Q.copy(), H, False)


def golub_kahan(Amat, u1, k, tol=1e-12):
    """Run ``k`` steps of Golub-Kahan bidiagonalization started from ``u1``.

    ``Amat`` may be a dense array, a sparse matrix or a
    :class:`scipy.sparse.linalg.LinearOperator`; only ``matvec`` and
    ``rmatvec`` are used.
    """
    op = aslinearoperator(Amat)
    m, n = op.shape
    u1 = _unit(u1, "u1")
    U = OrthoBasis(1, m, capacity=min(k + 1, m))
    V = OrthoBasis(2, n, capacity=min(k, n))
    U.append(u1)
    alphas, betas = [], []
    scale = 0.0
    breakdown = False
    for i in range(k):
        r = op.rmatvec(U.Q[:, i])
        scale = max(scale, float(np.linalg.norm(r)))
        _, a, ok = orthogonalize_append(V, r, tol=tol, scale=scale)
        if not ok:
            breakdown = True
            break
        alphas.append(a)
        p = op.matvec(V.Q[:, i])
        scale = max(scale, float(np.linalg.norm(p)))
        _, b, ok = orthogonalize_append(U, p, tol=tol, scale=scale)
        if not ok:
            breakdown = True
            break
        betas.append(b)
    j = len(alphas)
    rows = U.size
    B = np.zeros((rows, j))
    B[np.arange(j), np.arange(j)] = alphas
    nb = len(betas)
    B[np.arange(1, nb + 1), np.arange(nb)] = betas
    return GolubKahanResult(U.Q.copy(), V.Q.copy(), B, breakdown)


def lanczos(Gmat, q1, k, tol=1e-10):
    """Symmetric Lanczos with full reorthogonalization.

    ``Gmat`` is a symmetric matrix, a LinearOperator, or any callable
    computing ``G @ x``. A breakdown (an invariant subspace was found)
    returns the shorter basis with ``breakdown=True``.
    """
    if callable(Gmat) and not hasattr(Gmat, "shape"):
        matvec = Gmat
        n = np.asarray(q1).size
    else:
        op = aslinearoperator(Gmat)
        matvec = op.matvec
        n = op.shape[0]
    q1 = _unit(q1, "q1")
    basis = OrthoBasis(1, n, capacity=min(k, n))
    basis.append(q1)
    alphas, betas = [], []
    scale = 0.0
    for i in range(k):
        w = np.asarray(matvec(basis.Q[:, i]), dtype=np.float64).ravel()
        a = float(basis.Q[:, i] @ w)
        alphas.append(a)
        scale = max(scale, abs(a), float(np.linalg.norm(w)))
        if i == k - 1:
            break
        _, b, ok = orthogonalize_append(basis, w, tol=tol, scale=scale)
        if not ok:
            betas.append(b)
            return LanczosResult(basis.Q.copy(), np.array(alphas), np.array(betas), True)
        betas.append(b)
    return LanczosResult(basis.Q.copy(), np.array(alphas), np.array(betas), False)
