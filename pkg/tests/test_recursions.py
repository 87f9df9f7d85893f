import numpy as np
import pytest

from tensorkrylov import frob_norm, tvv
from tensorkrylov.krylov import (
    BreakdownError,
    StartVectors,
    contracted_lanczos,
    contracted_recursion,
    factorization_residuals,
    load_state,
    maximal_recursion,
    maximal_truncate,
    minimal_recursion,
    modified_minimal_recursion,
    optimized_candidate,
    optimized_recursion,
    small_mode_recursion,
)
from tensorkrylov.bench import gen_sparse
from tensorkrylov.tensor import gram, ttm_multi
from tensorkrylov.tucker import core_project

from conftest import containment_angle, low_rank, subspace_angle


def in_range_start(factors, rng, with_w=False):
    X, Y, Z = factors
    return StartVectors(X @ rng.standard_normal(X.shape[1]), Y @ rng.standard_normal(Y.shape[1]),
                        Z @ rng.standard_normal(Z.shape[1]) if with_w else None)


def max_angle(state, factors):
    return max(subspace_angle(X, state.bases[m].Q) for m, X in zip((1, 2, 3), factors))


# minimal recursion -------------------------------------------------------------

def test_minimal_recovers_cubical_rank(rng):
    A, F, _ = low_rank((20, 20, 20), (5, 5, 5), rng)
    st = minimal_recursion(A, 5, start=in_range_start(F, rng), random_state=0)
    assert st.sizes == (5, 5, 5)
    assert max_angle(st, F) < 1e-8
    assert st.counter.tvv == 3 * (5 - 1) + 1


def test_minimal_k1_only_w1(rng):
    A = rng.standard_normal((4, 5, 6))
    sv = StartVectors.random(A.shape, 0)
    st = minimal_recursion(A, 1, start=sv)
    assert st.sizes == (1, 1, 1) and st.counter.tvv == 1
    w = tvv(A, (1, 2), sv.u1, sv.v1)
    np.testing.assert_allclose(st.W[:, 0], w / np.linalg.norm(w), rtol=1e-13)


def test_minimal_fibre_identities_and_orthonormality(rng):
    A = rng.standard_normal((12, 13, 14))
    st = minimal_recursion(A, 10, random_state=1)
    rep = factorization_residuals(A, st)
    assert rep["ok"], rep
    for fam in ("fibre-u", "fibre-v", "fibre-w", "coefficients"):
        assert rep[fam] < 1e-12
    assert st.orthogonality_error() < 1e-12
    # the partial factorization fibre (<A; V_k, W_k>_{-1})(:, i, i) = U_k H^u(:, i)
    U, V, W = st.factors
    P = ttm_multi(A, [None, V, W], transpose=True)
    Hu = st.hessenberg(1)
    for i in range(9):
        np.testing.assert_allclose(P[:, i, i], U @ Hu[: U.shape[1], i], atol=1e-12 * frob_norm(A))


def test_minimal_counter_law(rng):
    A = rng.standard_normal((15, 15, 15))
    for k in (1, 2, 7, 15):
        assert minimal_recursion(A, k, random_state=0).counter.tvv == 3 * (k - 1) + 1


def test_parallel_variant_identity(rng):
    A = rng.standard_normal((10, 11, 12))
    st = minimal_recursion(A, 6, variant="parallel", random_state=2)
    assert st.meta["variant"] == "parallel"
    rep = factorization_residuals(A, st)
    assert rep["ok"]
    # (<A; U_k, W_k>_{-2})(i, :, i) = V_k H^v(:, i)
    U, V, W = st.factors
    P = ttm_multi(A, [U, None, W], transpose=True)
    Hv = st.hessenberg(2)
    for i in range(5):
        np.testing.assert_allclose(P[i, :, i], V @ Hv[: V.shape[1], i], atol=1e-12 * frob_norm(A))


def test_breakdown_resolution_and_strict(rng):
    # rank-(2,2,2) tensor: minimal recursion must break down after two vectors
    A, F, _ = low_rank((8, 8, 8), (2, 2, 2), rng)
    st = minimal_recursion(A, 4, start=in_range_start(F, rng), random_state=3)
    assert st.sizes == (4, 4, 4)
    assert st.events and all(e.resolution in ("subspace-complete", "random-replacement")
                             for e in st.events)
    assert all(e.residual <= 1e-10 * frob_norm(A) for e in st.events)
    assert st.orthogonality_error() < 1e-12
    with pytest.raises(BreakdownError):
        minimal_recursion(A, 4, start=in_range_start(F, rng), strict=True)


def test_minimal_rejects_bad_k(rng):
    with pytest.raises(ValueError):
        minimal_recursion(rng.standard_normal((3, 4, 5)), 4)


def test_start_vectors_unit_and_validation(rng):
    A = rng.standard_normal((3, 4, 5))
    sv = StartVectors.make(A, ([3.0, 0, 0], [0, 2.0, 0, 0]))
    assert np.linalg.norm(sv.u1) == pytest.approx(1, abs=1e-12) and sv.provenance == "user"
    assert StartVectors.make(A, "fibre-mean").provenance == "fibre-mean"
    with pytest.raises(ValueError):
        StartVectors.make(A, ([1.0, 0], [1.0, 0, 0, 0]))
    with pytest.raises(ValueError):
        StartVectors(np.zeros(3), np.ones(4))


def test_start_vectors_from_file(tmp_path, rng):
    A = rng.standard_normal((3, 4, 5))
    np.savez(tmp_path / "s.npz", u1=np.ones(3), v1=np.arange(1.0, 5.0))
    st = minimal_recursion(A, 2, start=f"file:{tmp_path / 's.npz'}")
    assert st.meta["start"] == "file"
    np.testing.assert_allclose(st.U[:, 0], np.ones(3) / np.sqrt(3))


# modified recursion ------------------------------------------------------------

def test_modified_recovers_general_rank(rng):
    A, F, _ = low_rank((30, 40, 50), (5, 8, 12), rng)
    st = modified_minimal_recursion(A, (5, 8, 12), start=in_range_start(F, rng), random_state=0)
    assert st.sizes == (5, 8, 12)
    assert len(st.step_sizes) - 1 <= 12
    assert max_angle(st, F) < 1e-8
    assert "combination_seed" in st.meta
    assert factorization_residuals(A, st)["ok"]


def test_modified_equals_minimal_when_cubical(rng):
    A = rng.standard_normal((9, 9, 9))
    a = minimal_recursion(A, 6, random_state=4)
    b = modified_minimal_recursion(A, (6, 6, 6), random_state=4)
    for m in (1, 2, 3):
        np.testing.assert_allclose(a.bases[m].Q, b.bases[m].Q, atol=1e-12)


def test_modified_random_start_contains_subspace(rng):
    A, F, _ = low_rank((30, 40, 50), (5, 8, 12), rng)
    st = modified_minimal_recursion(A, (6, 9, 13), random_state=7)
    assert len(st.step_sizes) - 1 <= 13
    for m, X in zip((1, 2, 3), F):
        assert containment_angle(X, st.bases[m].Q) < 1e-8


# small-mode recursion ----------------------------------------------------------

def test_small_mode_cyclic_selection(rng):
    A = rng.standard_normal((3, 12, 13))
    st = small_mode_recursion(A, 1, 9, policy="cyclic", random_state=0)
    assert st.sizes[0] == 3 and st.sizes[1:] == (9, 9)
    assert st.meta["selections"]["1"] == [0, 1, 2, 0, 1, 2]


def test_small_mode_recovery(rng):
    A, F, _ = low_rank((4, 25, 25), (4, 10, 10), rng)
    st = small_mode_recursion(A, 1, 10, start=in_range_start(F, rng), random_state=1)
    assert st.sizes == (4, 10, 10)
    assert max_angle(st, F) < 1e-8


def test_small_mode_requires_small_dimension(rng):
    with pytest.raises(ValueError):
        small_mode_recursion(rng.standard_normal((6, 6, 6)), 1, 5)


def test_small_mode_optimized_policy_not_worse(rng):
    wins = 0
    for seed in range(5):
        A = np.random.default_rng(seed).standard_normal((3, 15, 15))
        cyc = small_mode_recursion(A, 1, 8, policy="cyclic", random_state=seed)
        opt = small_mode_recursion(A, 1, 8, policy="optimized", random_state=seed)
        cn = lambda s: frob_norm(core_project(A, *s.factors, check=False))
        wins += cn(opt) >= cn(cyc) - 1e-10
        assert opt.orthogonality_error() < 1e-12
    assert wins >= 3


# maximal recursion -------------------------------------------------------------

def test_maximal_diagram_and_identities():
    A = np.random.default_rng(0).standard_normal((30, 130, 25))
    st = maximal_recursion(A, random_state=0)
    growth = [(lp.mode, lp.sizes[lp.mode - 1]) for lp in st.loops]
    assert growth[:5] == [(1, 2), (2, 3), (3, 6), (1, 19), (2, 115)]
    rep = factorization_residuals(A, st)
    assert rep["ok"], rep
    assert rep["loop-u"] < 1e-10 and rep["loop-v"] < 1e-10 and rep["loop-w"] < 1e-10
    u1, v1, w1 = st.U[:, 0], st.V[:, 0], st.W[:, 0]
    assert st.H.values[0, 0, 0] == pytest.approx(w1 @ tvv(A, (1, 2), u1, v1), rel=1e-12)


def test_maximal_h_nesting():
    A = np.random.default_rng(1).standard_normal((12, 40, 10))
    small = maximal_recursion(A, max_loops=3, random_state=5)
    big = maximal_recursion(A, max_loops=4, random_state=5)
    a, b, c = small.H.shape
    np.testing.assert_array_equal(big.H.values[:a, :b, :c], small.H.values)
    np.testing.assert_array_equal(big.H.mask[:a, :b, :c], small.H.mask)


def test_maximal_limits_grow_all_modes():
    A = np.random.default_rng(2).standard_normal((20, 20, 20))
    st = maximal_recursion(A, limits=(6, 7, 8), random_state=0)
    assert st.sizes == (6, 7, 8)
    assert factorization_residuals(A, st)["ok"]


def test_maximal_truncate(rng):
    A, F, _ = low_rank((15, 15, 15), (5, 5, 5), rng)
    st = maximal_recursion(A, limits=(8, 8, 8), random_state=1)
    assert maximal_truncate(st, A, st.sizes).sizes == st.sizes
    cut = maximal_truncate(st, A, (5, 5, 5))
    assert cut.sizes == (5, 5, 5)
    assert max_angle(cut, F) < 1e-8
    full = frob_norm(core_project(A, *st.factors, check=False))
    assert frob_norm(cut.H.values) <= full * (1 + 1e-12)
    bounded = maximal_truncate(st, A, (5, 5, 5), max_other=6)
    assert bounded.sizes == (5, 5, 5)
    with pytest.raises(ValueError):
        maximal_truncate(st, A, (9, 5, 5))


# optimized recursion -----------------------------------------------------------

def test_optimized_equals_minimal_within_warmup(rng):
    A = rng.standard_normal((10, 10, 10))
    a = minimal_recursion(A, 4, random_state=3)
    b = optimized_recursion(A, 4, warmup=4, random_state=3)
    for m in (1, 2, 3):
        np.testing.assert_allclose(a.bases[m].Q, b.bases[m].Q, atol=1e-13)


@pytest.mark.parametrize("strategy", ["exact-hosvd", "inner-krylov"])
def test_optimized_identities(rng, strategy):
    A = rng.standard_normal((14, 15, 16))
    st = optimized_recursion(A, 8, strategy=strategy, warmup=2, random_state=0)
    assert st.sizes == (8, 8, 8)
    rep = factorization_residuals(A, st)
    assert rep["ok"], rep


def test_optimized_candidate_dominates_plain(rng):
    A = rng.standard_normal((20, 20, 20))
    st = minimal_recursion(A, 5, random_state=0)
    for mode in (1, 2, 3):
        opt = optimized_candidate(A, st.bases, mode, strategy="exact-hosvd")
        assert opt.objective >= opt.plain - 1e-10


def test_inner_krylov_close_to_exact():
    A = gen_sparse((100, 100, 100), 10_000, seed=0)
    ex = optimized_recursion(A, 20, strategy="exact-hosvd", random_state=0)
    ik = optimized_recursion(A, 20, strategy="inner-krylov", random_state=0)
    cn = lambda s: frob_norm(core_project(A, *s.factors, check=False))
    # qualitative: inner-krylov should be in the same range as exact-hosvd
    assert cn(ik) > 0.8 * cn(ex)


# contracted products -----------------------------------------------------------

def test_contracted_lanczos_recovery(rng):
    A, F, _ = low_rank((20, 22, 24), (4, 6, 9), rng)
    st = contracted_recursion(A, (4, 6, 9))
    assert st.sizes == (4, 6, 9)
    assert max_angle(st, F) < 1e-8


def test_contracted_lanczos_interlacing(rng):
    A = rng.standard_normal((8, 8, 8))
    res = contracted_lanczos(A, 1, 5)
    ev = np.linalg.eigvalsh(gram(A, 1))
    t = np.linalg.eigvalsh(res.T)
    assert t.min() >= ev.min() - 1e-10 and t.max() <= ev.max() + 1e-10


def test_contracted_lanczos_eigenvector_start(rng):
    A = rng.standard_normal((6, 7, 8))
    _, vecs = np.linalg.eigh(gram(A, 2))
    res = contracted_lanczos(A, 2, 4, start=vecs[:, 0])
    assert res.breakdown and res.Q.shape[1] == 1


def test_contracted_explicit_and_implicit_agree():
    A = gen_sparse((15, 16, 17), 300, seed=4)
    a = contracted_lanczos(A, 3, 6, explicit_gram=True)
    b = contracted_lanczos(A, 3, 6, explicit_gram=False)
    np.testing.assert_allclose(a.T, b.T, rtol=1e-10, atol=1e-10)


# verification and archives -----------------------------------------------------

def test_corrupted_coefficient_is_flagged(rng):
    A = rng.standard_normal((10, 10, 10))
    st = minimal_recursion(A, 5, random_state=0)
    assert factorization_residuals(A, st)["ok"]
    st.H.corrupt((1, 1, 1), 1e-3 * frob_norm(A))
    rep = factorization_residuals(A, st)
    assert not rep["ok"] and rep["coefficients"] > 1e-6


def test_state_archive_roundtrip(tmp_path, rng):
    A = rng.standard_normal((10, 30, 8))
    for st in (minimal_recursion(A, 6, random_state=0),
               maximal_recursion(A, max_loops=4, random_state=0)):
        st.save(tmp_path / "s.npz")
        back = load_state(tmp_path / "s.npz")
        assert back.method == st.method and back.sizes == st.sizes
        np.testing.assert_array_equal(back.H.values, st.H.values)
        np.testing.assert_array_equal(back.H.mask, st.H.mask)
        assert back.counter.tvv == st.counter.tvv
        assert len(back.events) == len(st.events) and len(back.loops) == len(st.loops)
        assert factorization_residuals(A, back)["ok"]
