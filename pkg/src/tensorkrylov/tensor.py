"""Dense and sparse third-order tensors and their multilinear algebra.

Dense tensors are plain ``float64`` ndarrays of shape ``(l, m, n)``. Sparse
tensors are :class:`SparseTensor3` objects. Every function here accepts
either representation; results of contractions against dense factors are
dense.

Modes are numbered 1, 2, 3. Element indices are 0-based like numpy.

Matricization layout: the mode-``k`` unfolding has the mode-``k`` index as
row and the remaining two indices as column, the earlier mode varying
slowest. With this layout and the standard Kronecker product,

    matricize(ttm_multi(A, [U, V, W]), 1) == U @ matricize(A, 1) @ kron(V, W).T

and analogously for modes 2 (``kron(U, W)``) and 3 (``kron(U, V)``).
"""

import numpy as np
import scipy.sparse as sp

from ._validation import (
    check_matrix,
    check_mode,
    check_mode_pair,
    check_tensor,
    check_vector,
    remaining_mode,
)

__all__ = [
    "SparseTensor3",
    "ttm",
    "ttm_multi",
    "tvv",
    "inner",
    "frob_norm",
    "matricize",
    "dematricize",
    "contracted_product",
    "gram",
    "gram_matvec",
    "fibre_mean",
    "dims_of",
]


class SparseTensor3:
    """Coordinate-format sparse third-order tensor with a frontal-slice index.

    Entries are kept sorted by ``(k, j, i)`` so that the entries of the
    frontal slice ``A[:, :, k]`` are the contiguous range
    ``slice_ptr[k]:slice_ptr[k + 1]``. Explicit zeros are dropped.

    Parameters
    ----------
    indices : array_like of shape (nnz, 3)
        0-based ``(i, j, k)`` coordinates.
    values : array_like of shape (nnz,)
    shape : tuple of three ints
    duplicates : {'sum', 'error'}
        How repeated coordinates are handled. ``'sum'`` adds them up,
        ``'error'`` raises ``ValueError``.
    """

    def __init__(self, indices, values, shape, duplicates="sum"):
        shape = tuple(int(d) for d in shape)
        if len(shape) != 3 or any(d <= 0 for d in shape):
            raise ValueError(f"shape must be three positive integers, got {shape}")
        indices = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if indices.shape[0] != values.shape[0]:
            raise ValueError(
                f"got {indices.shape[0]} coordinates but {values.shape[0]} values"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain NaN or infinite entries")
        for mode, d in enumerate(shape):
            col = indices[:, mode]
            if col.size and (col.min() < 0 or col.max() >= d):
                raise ValueError(f"index out of range in mode {mode + 1} (dimension {d})")

        i, j, k = indices.T
        lin = (k * shape[1] + j) * shape[0] + i
        order = np.argsort(lin, kind="stable")
        lin, values = lin[order], values[order]
        if lin.size:
            first = np.concatenate(([True], lin[1:] != lin[:-1]))
            if not first.all():
                if duplicates == "error":
                    raise ValueError("duplicate coordinates in sparse tensor input")
                if duplicates != "sum":
                    raise ValueError(f"unknown duplicates policy {duplicates!r}")
                starts = np.flatnonzero(first)
                values = np.add.reduceat(values, starts)
                lin = lin[starts]
        keep = values != 0.0
        lin, values = lin[keep], values[keep]

        i = lin % shape[0]
        j = (lin // shape[0]) % shape[1]
        k = lin // (shape[0] * shape[1])
        self._shape = shape
        self._i, self._j, self._k, self._values = (
            np.ascontiguousarray(a) for a in (i, j, k, values)
        )
        for a in (self._i, self._j, self._k, self._values):
            a.setflags(write=False)
        self._slice_ptr = np.searchsorted(self._k, np.arange(shape[2] + 1))
        self._slice_ptr.setflags(write=False)
        self._unfoldings = {}

    @classmethod
    def from_dense(cls, A):
        A = check_tensor(A, allow_sparse=False)
        idx = np.argwhere(A != 0)
        return cls(idx, A[tuple(idx.T)], A.shape)

    @property
    def shape(self):
        return self._shape

    @property
    def nnz(self):
        return self._values.shape[0]

    @property
    def indices(self):
        """``(nnz, 3)`` array of 0-based coordinates in ``(k, j, i)`` order."""
        return np.column_stack([self._i, self._j, self._k])

    @property
    def values(self):
        return self._values

    @property
    def slice_ptr(self):
        return self._slice_ptr

    def frontal_slice(self, k):
        """Return ``A[:, :, k]`` as a CSR matrix."""
        lo, hi = self._slice_ptr[k], self._slice_ptr[k + 1]
        return sp.csr_matrix(
            (self._values[lo:hi], (self._i[lo:hi], self._j[lo:hi])),
            shape=self._shape[:2],
        )

    def todense(self):
        A = np.zeros(self._shape)
        A[self._i, self._j, self._k] = self._values
        return A

    def unfold(self, mode):
        """Sparse mode-``mode`` matricization (CSR), cached."""
        mode = check_mode(mode)
        if mode not in self._unfoldings:
            l, m, n = self._shape
            if mode == 1:
                rows, cols, shape = self._i, self._j * n + self._k, (l, m * n)
            elif mode == 2:
                rows, cols, shape = self._j, self._i * n + self._k, (m, l * n)
            else:
                rows, cols, shape = self._k, self._i * m + self._j, (n, l * m)
            self._unfoldings[mode] = sp.csr_matrix((self._values, (rows, cols)), shape=shape)
        return self._unfoldings[mode]

    def norm(self):
        return float(np.linalg.norm(self._values))

    def mode_coords(self, mode):
        return (self._i, self._j, self._k)[mode - 1]

    def __eq__(self, other):
        if not isinstance(other, SparseTensor3):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        l, m, n = self._shape
        return f"SparseTensor3(shape=({l}, {m}, {n}), nnz={self.nnz})"


def dims_of(A):
    return tuple(A.shape)


def _as_operand(A):
    # entry points validate values; kernels only fix dtype and layout
    A = check_tensor(A, check_finite=False)
    return A, isinstance(A, SparseTensor3)


def matricize(A, mode):
    """Mode-``mode`` unfolding as a dense matrix."""
    mode = check_mode(mode)
    A, sparse = _as_operand(A)
    if sparse:
        return A.unfold(mode).toarray()
    return np.moveaxis(A, mode - 1, 0).reshape(A.shape[mode - 1], -1)


def dematricize(M, mode, dims):
    """Inverse of :func:`matricize` for a tensor of shape ``dims``."""
    mode = check_mode(mode)
    dims = tuple(int(d) for d in dims)
    M = np.asarray(M, dtype=np.float64)
    rest = [d for axis, d in enumerate(dims) if axis != mode - 1]
    if M.shape != (dims[mode - 1], rest[0] * rest[1]):
        raise ValueError(f"matrix of shape {M.shape} cannot be folded into {dims} along mode {mode}")
    return np.moveaxis(M.reshape(dims[mode - 1], *rest), 0, mode - 1)


def ttm(A, M, mode, transpose=False):
    """Multiply tensor ``A`` by matrix ``M`` along ``mode``.

    With ``transpose=False`` computes ``b[i,j,k] = sum_a M[i,a] A[a,j,k]``
    (for mode 1). With ``transpose=True`` ``M`` is applied as ``M.T``, which
    is the usual way to project onto the columns of an orthonormal ``M``.
    """
    mode = check_mode(mode)
    A, sparse = _as_operand(A)
    M = check_matrix(M)
    if transpose:
        M = M.T
    d = A.shape[mode - 1]
    if M.shape[1] != d:
        raise ValueError(
            f"mode-{mode} product: matrix has {M.shape[1]} columns, tensor has dimension {d}"
        )
    if sparse:
        dims = list(A.shape)
        dims[mode - 1] = M.shape[0]
        out = np.asarray((A.unfold(mode).T @ M.T).T)
        return dematricize(out, mode, dims)
    return np.moveaxis(np.tensordot(M, A, axes=(1, mode - 1)), 0, mode - 1)


def ttm_multi(A, factors, transpose=False):
    """Multiply ``A`` by up to three matrices, one per mode.

    ``factors`` is a length-3 sequence (entries may be ``None``) or a dict
    mapping modes to matrices. Modes commute, so the order of application
    does not change the result beyond rounding.
    """
    if isinstance(factors, dict):
        items = sorted((check_mode(m), M) for m, M in factors.items())
    else:
        factors = list(factors)
        if len(factors) != 3:
            raise ValueError("factors must have one entry per mode")
        items = [(m, M) for m, M in zip((1, 2, 3), factors) if M is not None]
    out, _ = _as_operand(A)
    for mode, M in items:
        out = ttm(out, M, mode, transpose=transpose)
    return out


def tvv(A, modes, x, y, counter=None):
    """Contract ``A`` with ``x`` and ``y`` in two modes, leaving a vector.

    ``x`` is contracted with ``modes[0]`` and ``y`` with ``modes[1]``. The
    result lives in the remaining mode; e.g. ``tvv(A, (1, 3), u, w)`` is the
    length-``m`` vector ``sum_{i,k} a[i,j,k] u[i] w[k]``. Sparse tensors are
    processed in ``O(nnz)``.
    """
    a, b = check_mode_pair(modes)
    if a > b:
        a, b = b, a
        x, y = y, x
    A, sparse = _as_operand(A)
    l, m, n = A.shape
    x = check_vector(x, A.shape[a - 1], "x")
    y = check_vector(y, A.shape[b - 1], "y")
    if counter is not None:
        counter.tvv += 1
    c = remaining_mode(a, b)
    if sparse:
        w = A.values * x[A.mode_coords(a)] * y[A.mode_coords(b)]
        return np.bincount(A.mode_coords(c), weights=w, minlength=A.shape[c - 1])
    if (a, b) == (2, 3):
        return (A.reshape(l * m, n) @ y).reshape(l, m) @ x
    if (a, b) == (1, 3):
        return x @ (A.reshape(l * m, n) @ y).reshape(l, m)
    return y @ (x @ A.reshape(l, m * n)).reshape(m, n)


def inner(A, B):
    """Frobenius inner product of two tensors of equal shape."""
    A, sa = _as_operand(A)
    B, sb = _as_operand(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch in inner product: {A.shape} vs {B.shape}")
    if sa and sb:
        la = (A._k * A.shape[1] + A._j) * A.shape[0] + A._i
        lb = (B._k * B.shape[1] + B._j) * B.shape[0] + B._i
        _, ia, ib = np.intersect1d(la, lb, assume_unique=True, return_indices=True)
        return float(A.values[ia] @ B.values[ib])
    if sa or sb:
        S, D = (A, B) if sa else (B, A)
        return float(S.values @ D[S._i, S._j, S._k])
    return float(np.tensordot(A, B, axes=3))


def frob_norm(A):
    A, sparse = _as_operand(A)
    if sparse:
        return A.norm()
    return float(np.linalg.norm(A.ravel()))


def _parse_contraction(modes):
    if isinstance(modes, (int, np.integer)):
        if modes < 0:
            keep = check_mode(-modes)
            return tuple(m for m in (1, 2, 3) if m != keep)
        return (check_mode(modes),)
    modes = tuple(check_mode(m) for m in modes)
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated mode in contraction {modes}")
    return tuple(sorted(modes))


def contracted_product(A, B, modes):
    """Contracted tensor product over ``modes`` in both arguments.

    ``modes`` is a sequence of modes, or a negative int ``-k`` meaning all
    modes except ``k``. The result's modes are the non-contracted modes of
    ``A`` followed by those of ``B``: a 4-tensor for one contracted mode, a
    matrix for two, and a float for all three. ``contracted_product(A, A,
    -k)`` is the mode-``k`` Gram matrix ``A_(k) A_(k)^T``.
    """
    contracted = _parse_contraction(modes)
    A, sa = _as_operand(A)
    B, sb = _as_operand(B)
    for m in contracted:
        if A.shape[m - 1] != B.shape[m - 1]:
            raise ValueError(
                f"contracted mode {m} has dimension {A.shape[m - 1]} in the first "
                f"argument and {B.shape[m - 1]} in the second"
            )
    if len(contracted) == 3:
        return inner(A, B)
    if len(contracted) == 2 and (sa or sb):
        k = remaining_mode(*contracted)
        left = A.unfold(k) if sa else matricize(A, k)
        right = B.unfold(k) if sb else matricize(B, k)
        out = left @ right.T
        return out.toarray() if sp.issparse(out) else np.asarray(out)
    if sa:
        A = A.todense()
    if sb:
        B = B.todense()
    axes = [m - 1 for m in contracted]
    return np.tensordot(A, B, axes=(axes, axes))


def gram(A, mode):
    """Mode-``mode`` Gram matrix ``<A, A>_{-mode}``."""
    return contracted_product(A, A, -check_mode(mode))


def gram_matvec(A, mode, u, counter=None):
    """Apply the mode-``mode`` Gram matrix to ``u`` without forming it.

    Computes ``sum_k A_k A_k^T u`` over the slices orthogonal to ``mode``,
    which equals ``A_(mode) (A_(mode)^T u)``. Costs ``O(nnz)`` for sparse
    tensors.
    """
    mode = check_mode(mode)
    A, sparse = _as_operand(A)
    u = check_vector(u, A.shape[mode - 1], "u")
    if counter is not None:
        counter.gram_matvec += 1
    if sparse:
        M = A.unfold(mode)
        return np.asarray(M @ (M.T @ u)).ravel()
    if mode == 1:
        M = A.reshape(A.shape[0], -1)
        return M @ (u @ M)
    # contract mode `mode` with u, then fold back against A over the other two
    T = np.tensordot(u, A, axes=(0, mode - 1))
    axes = [ax for ax in range(3) if ax != mode - 1]
    return np.tensordot(A, T, axes=(axes, [0, 1]))


def fibre_mean(A, mode):
    """Mean of the mode-``mode`` fibres of ``A``."""
    mode = check_mode(mode)
    A, _ = _as_operand(A)
    a, b = (m for m in (1, 2, 3) if m != mode)
    da, db = A.shape[a - 1], A.shape[b - 1]
    return tvv(A, (a, b), np.full(da, 1.0 / da), np.full(db, 1.0 / db))
