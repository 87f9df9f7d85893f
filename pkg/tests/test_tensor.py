import numpy as np
import pytest

from tensorkrylov.bench import gen_sparse
from tensorkrylov.tensor import (
    SparseTensor3,
    contracted_product,
    dematricize,
    fibre_mean,
    frob_norm,
    gram,
    gram_matvec,
    inner,
    matricize,
    ttm,
    ttm_multi,
    tvv,
)

from conftest import brute_ttm, brute_tvv


def qr(rng, d, r):
    return np.linalg.qr(rng.standard_normal((d, r)))[0]


# ttm -------------------------------------------------------------------------

def test_ttm_identity(rng):
    A = rng.standard_normal((3, 4, 5))
    for mode, d in zip((1, 2, 3), A.shape):
        np.testing.assert_array_equal(ttm(A, np.eye(d), mode), A)


def test_ttm_ones_row_gives_column_sums(slice222):
    B = ttm(slice222, np.ones((1, 2)), 1)
    assert B.shape == (1, 2, 2)
    np.testing.assert_allclose(B[0, :, 0], [4, 6])
    np.testing.assert_allclose(B[0, :, 1], [12, 14])
    np.testing.assert_allclose(B, brute_ttm(slice222, np.ones((1, 2)), 1))


def test_ttm_zero_matrix_annihilates(rng):
    A = rng.standard_normal((3, 4, 5))
    assert not np.any(ttm(A, np.zeros((2, 4)), 2))


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_ttm_matches_triple_loop(rng, mode):
    A = rng.standard_normal((3, 4, 5))
    M = rng.standard_normal((2, A.shape[mode - 1]))
    np.testing.assert_allclose(ttm(A, M, mode), brute_ttm(A, M, mode), rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(ttm(A, M.T, mode, transpose=True), brute_ttm(A, M, mode),
                               rtol=1e-13, atol=1e-13)


def test_ttm_dimension_error_names_mode(rng):
    with pytest.raises(ValueError, match="mode-2.*3 columns.*dimension 4"):
        ttm(rng.standard_normal((3, 4, 5)), np.ones((2, 3)), 2)


def test_ttm_multi_sequential_and_identity(rng):
    A = rng.standard_normal((3, 4, 5))
    U, V, W = (rng.standard_normal((d + 1, d)) for d in A.shape)
    seq = ttm(ttm(ttm(A, U, 1), V, 2), W, 3)
    np.testing.assert_allclose(ttm_multi(A, [U, V, W]), seq, rtol=1e-13)
    np.testing.assert_allclose(ttm_multi(A, {3: W, 1: U, 2: V}), seq, rtol=1e-13)
    np.testing.assert_allclose(ttm_multi(A, [np.eye(3), np.eye(4), np.eye(5)]), A)
    np.testing.assert_allclose(ttm_multi(A, [None, V, None]), ttm(A, V, 2))


def test_ttm_commutes(rng):
    A = rng.standard_normal((3, 4, 5))
    U, V = rng.standard_normal((2, 3)), rng.standard_normal((6, 4))
    np.testing.assert_allclose(ttm(ttm(A, U, 1), V, 2), ttm(ttm(A, V, 2), U, 1), rtol=1e-13)


def test_projected_core_matches_elementwise_tvv(rng):
    A = rng.standard_normal((4, 4, 4))
    U, V, W = (qr(rng, 4, 2) for _ in range(3))
    S = ttm_multi(A, [U, V, W], transpose=True)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                ref = W[:, c] @ brute_tvv(A, (1, 2), U[:, a], V[:, b])
                assert S[a, b, c] == pytest.approx(ref, rel=1e-12, abs=1e-13)


# tvv ---------------------------------------------------------------------------

def test_tvv_unit_vectors_select_fibres(rng, slice222):
    A = rng.standard_normal((3, 4, 5))
    e1 = lambda d: np.eye(d)[0]
    np.testing.assert_array_equal(tvv(A, (1, 2), e1(3), e1(4)), A[0, 0, :])
    np.testing.assert_allclose(tvv(slice222, (2, 3), [1, 0], [1, 0]), [1, 3])


@pytest.mark.parametrize("modes", [(1, 2), (1, 3), (2, 3), (3, 1), (2, 1)])
def test_tvv_matches_triple_loop(rng, modes):
    A = rng.standard_normal((5, 6, 7))
    x = rng.standard_normal(A.shape[modes[0] - 1])
    y = rng.standard_normal(A.shape[modes[1] - 1])
    np.testing.assert_allclose(tvv(A, modes, x, y), brute_tvv(A, modes, x, y), rtol=1e-12)


def test_tvv_errors(rng):
    A = rng.standard_normal((3, 4, 5))
    with pytest.raises(ValueError):
        tvv(A, (1, 1), np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        tvv(A, (1, 2), np.ones(4), np.ones(4))


def test_tvv_consistency_with_projection(rng):
    A = rng.standard_normal((3, 4, 5))
    u, v, w = (rng.standard_normal(d) for d in A.shape)
    s = ttm_multi(A, [u[:, None], v[:, None], w[:, None]], transpose=True).item()
    assert w @ tvv(A, (1, 2), u, v) == pytest.approx(s, rel=1e-12)
    assert u @ tvv(A, (2, 3), v, w) == pytest.approx(s, rel=1e-12)


# inner, norm -------------------------------------------------------------------

def test_inner_and_norm(rng, slice222):
    assert inner(slice222, slice222) == 204
    assert frob_norm(slice222) == pytest.approx(np.sqrt(204))
    assert inner(slice222, np.zeros((2, 2, 2))) == 0
    assert frob_norm(np.zeros((4, 4, 4))) == 0
    A, B = rng.standard_normal((2, 3, 3, 3))
    assert inner(A, B) == pytest.approx(inner(B, A))
    with pytest.raises(ValueError):
        inner(A, np.zeros((3, 3, 2)))


def test_norm_orthogonal_invariance(rng):
    A = rng.standard_normal((4, 5, 6))
    Qs = [qr(rng, d, d) for d in A.shape]
    assert frob_norm(ttm_multi(A, Qs)) == pytest.approx(frob_norm(A), rel=1e-12)


# matricization -----------------------------------------------------------------

def test_matricize_scalar_and_roundtrip(rng):
    np.testing.assert_array_equal(matricize(np.full((1, 1, 1), 7.0), 1), [[7.0]])
    A = rng.standard_normal((3, 4, 5))
    for mode in (1, 2, 3):
        M = matricize(A, mode)
        assert M.shape == (A.shape[mode - 1], A.size // A.shape[mode - 1])
        np.testing.assert_array_equal(dematricize(M, mode, A.shape), A)


def test_matricize_kronecker_identity(rng):
    A = rng.standard_normal((3, 4, 5))
    U, V, W = (rng.standard_normal((d + 1, d)) for d in A.shape)
    B = ttm_multi(A, [U, V, W])
    ref = {1: U @ matricize(A, 1) @ np.kron(V, W).T,
           2: V @ matricize(A, 2) @ np.kron(U, W).T,
           3: W @ matricize(A, 3) @ np.kron(U, V).T}
    for mode in (1, 2, 3):
        np.testing.assert_allclose(matricize(B, mode), ref[mode], rtol=1e-12, atol=1e-12)


# contracted products -----------------------------------------------------------

def test_contracted_product_forms(rng):
    A = rng.standard_normal((3, 4, 5))
    B = rng.standard_normal((3, 4, 6))
    assert contracted_product(A, A, [1, 2, 3]) == pytest.approx(inner(A, A))
    for k in (1, 2, 3):
        M = matricize(A, k)
        np.testing.assert_allclose(contracted_product(A, A, -k), M @ M.T, rtol=1e-12)
        np.testing.assert_allclose(gram(A, k), M @ M.T, rtol=1e-12)
    C12 = contracted_product(A, B, [1, 2])
    assert C12.shape == (5, 6)
    np.testing.assert_allclose(C12, np.einsum("ijk,ijl->kl", A, B))
    C1 = contracted_product(A, B, [1])
    assert C1.shape == (4, 5, 4, 6)
    np.testing.assert_allclose(C1, np.einsum("ijk,ilm->jklm", A, B))
    with pytest.raises(ValueError):
        contracted_product(A, rng.standard_normal((2, 4, 5)), [1])


def test_gram_diagonal_for_single_nonzero_tubes():
    A = gen_sparse((30, 20, 10), 150, seed=3, single_per_tube=True)
    G = gram(A, 3)
    np.testing.assert_array_equal(G, np.diag(np.diag(G)))


def test_gram_matvec_matches_dense():
    A = gen_sparse((10, 10, 10), 50, seed=0)
    D = A.todense()
    u = np.random.default_rng(0).standard_normal(10)
    for mode in (1, 2, 3):
        M = matricize(D, mode)
        ref = M @ (M.T @ u)
        np.testing.assert_allclose(gram_matvec(A, mode, u), ref, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(gram_matvec(D, mode, u), ref, rtol=1e-12, atol=1e-12)
    assert not np.any(gram_matvec(A, 1, np.zeros(10)))


def test_gram_matvec_single_entry():
    A = SparseTensor3([[0, 0, 0]], [2.0], (2, 2, 2))
    np.testing.assert_array_equal(gram_matvec(A, 1, [1.0, 0.0]), [4.0, 0.0])


def test_fibre_mean(rng):
    A = rng.standard_normal((3, 4, 5))
    np.testing.assert_allclose(fibre_mean(A, 1), A.mean(axis=(1, 2)))
    np.testing.assert_allclose(fibre_mean(A, 3), A.mean(axis=(0, 1)))


# sparse storage ----------------------------------------------------------------

def test_sparse_invariants():
    idx = [[1, 0, 1], [0, 0, 0], [0, 1, 1], [1, 1, 0], [0, 0, 0], [1, 1, 1]]
    vals = [1.0, 2.0, 3.0, 0.0, 5.0, 4.0]
    A = SparseTensor3(idx, vals, (2, 2, 2))
    assert A.nnz == 4  # duplicate summed, zero dropped
    D = A.todense()
    assert D[0, 0, 0] == 7.0 and D[1, 1, 0] == 0.0
    keys = [(k, j, i) for i, j, k in A.indices]
    assert keys == sorted(keys)
    assert list(A.slice_ptr) == [0, 1, 4]
    assert A.frontal_slice(1).toarray().tolist() == [[0, 3], [1, 4]]
    with pytest.raises(ValueError, match="duplicate"):
        SparseTensor3(idx, vals, (2, 2, 2), duplicates="error")
    with pytest.raises(ValueError):
        SparseTensor3([[2, 0, 0]], [1.0], (2, 2, 2))
    with pytest.raises(ValueError):
        A.values[0] = 9.0


def test_sparse_dense_agreement():
    A = gen_sparse((6, 7, 8), 80, seed=2)
    D = A.todense()
    rng = np.random.default_rng(1)
    x, y, z = (rng.standard_normal(d) for d in A.shape)
    M = rng.standard_normal((3, 7))
    assert frob_norm(A) == pytest.approx(frob_norm(D), rel=1e-13)
    assert inner(A, D) == pytest.approx(inner(D, D), rel=1e-13)
    assert inner(A, A) == pytest.approx(inner(D, D), rel=1e-13)
    np.testing.assert_allclose(tvv(A, (1, 3), x, z), tvv(D, (1, 3), x, z), rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(ttm(A, M, 2), ttm(D, M, 2), rtol=1e-13, atol=1e-14)
    for mode in (1, 2, 3):
        np.testing.assert_array_equal(matricize(A, mode), matricize(D, mode))
        np.testing.assert_allclose(gram(A, mode), gram(D, mode), rtol=1e-13, atol=1e-14)
    assert SparseTensor3.from_dense(D) == A
