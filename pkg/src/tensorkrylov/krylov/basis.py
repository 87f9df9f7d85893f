"""Orthonormal bases, the shared coefficient tensor and Gram-Schmidt steps."""

import numpy as np

from .._validation import check_mode, check_vector


class OrthoBasis:
    """Growing set of orthonormal vectors in one mode.

    Vectors are stored column-wise in a preallocated ``dim x capacity``
    buffer; :attr:`Q` is a view of the filled columns.
    """

    def __init__(self, mode, dim, capacity=None):
        self.mode = check_mode(mode)
        self.dim = int(dim)
        self.capacity = self.dim if capacity is None else min(int(capacity), self.dim)
        self._buf = np.zeros((self.dim, max(self.capacity, 1)))
        self.size = 0

    @classmethod
    def from_matrix(cls, mode, Q):
        Q = np.asarray(Q, dtype=np.float64)
        basis = cls(mode, Q.shape[0])
        basis._buf[:, : Q.shape[1]] = Q
        basis.size = Q.shape[1]
        return basis

    @property
    def Q(self):
        return self._buf[:, : self.size]

    @property
    def full(self):
        return self.size >= self.capacity

    def latest(self):
        return self._buf[:, self.size - 1]

    def __len__(self):
        return self.size

    def append(self, q):
        if self.full:
            raise ValueError(f"mode-{self.mode} basis is full ({self.capacity} vectors)")
        self._buf[:, self.size] = q
        self.size += 1

    def project_out(self, x):
        """Return ``(I - Q Q^T) x`` using two Gram-Schmidt passes."""
        Q = self.Q
        if Q.shape[1] == 0:
            return x.copy()
        x = x - Q @ (Q.T @ x)
        return x - Q @ (Q.T @ x)

    def orthogonality_error(self):
        Q = self.Q
        if Q.shape[1] == 0:
            return 0.0
        return float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))))


def orthogonalize_append(basis, v, tol=1e-12, scale=1.0):
    """Orthogonalize ``v`` against ``basis`` and append the normalized residual.

    Two passes of classical Gram-Schmidt are always applied, which keeps the
    basis orthonormal to working precision.

    Parameters
    ----------
    basis : OrthoBasis
    v : ndarray
        Candidate vector.
    tol : float
        Breakdown tolerance. The residual is discarded when
        ``norm <= tol * max(scale, ||v||)``.
    scale : float
        Absolute reference magnitude for the breakdown test; recursions pass
        the tensor norm so that the test does not depend on scaling.

    Returns
    -------
    coeffs : ndarray
        Projection coefficients of ``v`` on the basis as it was on entry.
    norm : float
        Norm of the residual.
    appended : bool
        False signals a breakdown (or a full basis): nothing was appended.
    """
    v = check_vector(v, basis.dim, "v")
    Q = basis.Q
    if Q.shape[1]:
        c1 = Q.T @ v
        r = v - Q @ c1
        c2 = Q.T @ r
        r -= Q @ c2
        coeffs = c1 + c2
    else:
        coeffs = np.zeros(0)
        r = v.copy()
    norm = float(np.linalg.norm(r))
    if norm <= tol * max(scale, float(np.linalg.norm(v))) or basis.full:
        return coeffs, norm, False
    basis.append(r / norm)
    return coeffs, norm, True


def random_orthogonal_unit(basis, rng):
    """Random unit vector orthogonal to ``basis``."""
    for _ in range(10):
        x = basis.project_out(rng.standard_normal(basis.dim))
        nrm = np.linalg.norm(x)
        if nrm > 1e-8:
            return x / nrm
    raise RuntimeError(f"could not find a vector orthogonal to the mode-{basis.mode} basis")


class CoeffTensor:
    """Growing three-way array of orthonormalization coefficients.

    ``H[a, b, c]`` holds ``<A; u_a, v_b, w_c>`` for every entry produced by
    a recursion. A boolean fill mask tracks those entries; once written an
    entry is never overwritten, so coefficient tensors of successive stages
    are nested. Each recorded fibre is sealed at its length: the entries
    beyond it are zeros of the factorization and stay zero.
    """

    def __init__(self, shape=(0, 0, 0)):
        cap = tuple(max(4, s) for s in shape)
        self._data = np.zeros(cap)
        self._mask = np.zeros(cap, dtype=bool)
        self.shape = tuple(int(s) for s in shape)
        # consumed fibres: (mode, index_a, index_b) -> length; entries past
        # the length are structural zeros and are never written
        self._sealed = {}

    def _ensure(self, shape):
        shape = tuple(max(a, b) for a, b in zip(self.shape, shape))
        cap = self._data.shape
        if any(s > c for s, c in zip(shape, cap)):
            new_cap = tuple(max(c, s if s <= c else max(s, 2 * c)) for s, c in zip(shape, cap))
            data = np.zeros(new_cap)
            mask = np.zeros(new_cap, dtype=bool)
            a, b, c = cap
            data[:a, :b, :c] = self._data
            mask[:a, :b, :c] = self._mask
            self._data, self._mask = data, mask
        self.shape = shape

    def grow(self, shape):
        self._ensure(shape)

    def _is_sealed(self, entry):
        for mode in (1, 2, 3):
            a, b = (entry[m] for m in range(3) if m != mode - 1)
            n = self._sealed.get((mode, a, b))
            if n is not None and entry[mode - 1] >= n:
                return True
        return False

    def record(self, index, values):
        """Write one fibre of coefficients and seal it.

        ``index`` holds two ints and one ``slice(0, n)`` marking the fibre
        direction. Entries already written, or known to be structural zeros
        of an earlier fibre, keep their value. Positions past ``n`` in this
        fibre become structural zeros. Returns the number of entries written.
        """
        mode = next(m for m, ix in enumerate(index, start=1) if isinstance(ix, slice))
        n = index[mode - 1].stop
        need = [n if isinstance(ix, slice) else ix + 1 for ix in index]
        self._ensure(tuple(need))
        values = np.asarray(values, dtype=np.float64)
        written = 0
        for pos in range(n):
            entry = tuple(pos if isinstance(ix, slice) else ix for ix in index)
            if self._mask[entry] or self._is_sealed(entry):
                continue
            self._data[entry] = values[pos]
            self._mask[entry] = True
            written += 1
        a, b = (ix for ix in index if not isinstance(ix, slice))
        self._sealed.setdefault((mode, a, b), n)
        return written

    @property
    def values(self):
        a, b, c = self.shape
        return self._data[:a, :b, :c]

    @property
    def mask(self):
        a, b, c = self.shape
        return self._mask[:a, :b, :c]

    def __getitem__(self, index):
        return self.values[index]

    def corrupt(self, index, delta):
        """Add ``delta`` to a stored entry (fault injection for diagnostics)."""
        self._data[index] += delta
