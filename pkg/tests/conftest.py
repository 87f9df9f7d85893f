"""Shared oracles and the acceptance summary."""

import numpy as np
import pytest


def orth(M):
    """Orthonormal basis of the column space of ``M`` (via SVD, rank-revealing)."""
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > s[0] * 1e-10)) if s.size else 0
    return U[:, :r]


def containment_angle(X, Q):
    """Largest angle between span(X) and its projection onto span(Q).

    Zero exactly when span(X) is contained in span(Q). Computed from the
    sine formula ``||(I - Q Q^T) X_o||_2`` with ``X_o`` an orthonormal
    basis of span(X), independent of the library's own angle routine.
    """
    Xo = orth(X)
    Qo = orth(Q)
    R = Xo - Qo @ (Qo.T @ Xo)
    return float(np.arcsin(min(1.0, np.linalg.norm(R, 2))))


def subspace_angle(X, Q):
    """Largest principal angle between two subspaces of equal dimension."""
    Xo, Qo = orth(X), orth(Q)
    assert Xo.shape[1] == Qo.shape[1], (Xo.shape, Qo.shape)
    return containment_angle(Xo, Qo)


def low_rank(dims, ranks, rng):
    """Independent generator for ``(X, Y, Z) . C`` with orthonormal factors."""
    factors = [np.linalg.qr(rng.standard_normal((d, r)))[0] for d, r in zip(dims, ranks)]
    C = rng.standard_normal(ranks)
    A = np.einsum("abc,ia,jb,kc->ijk", C, *factors, optimize=True)
    return A, factors, C


def brute_ttm(A, M, mode):
    """Triple-loop mode product, ``M`` applied without transpose."""
    dims = list(A.shape)
    dims[mode - 1] = M.shape[0]
    B = np.zeros(dims)
    for i in range(dims[0]):
        for j in range(dims[1]):
            for k in range(dims[2]):
                idx = [i, j, k]
                s = 0.0
                for a in range(A.shape[mode - 1]):
                    src = list(idx)
                    src[mode - 1] = a
                    s += M[idx[mode - 1], a] * A[tuple(src)]
                B[i, j, k] = s
    return B


def brute_tvv(A, modes, x, y):
    l, m, n = A.shape
    c = 6 - sum(modes)
    out = np.zeros(A.shape[c - 1])
    for i in range(l):
        for j in range(m):
            for k in range(n):
                idx = (i, j, k)
                out[idx[c - 1]] += A[i, j, k] * x[idx[modes[0] - 1]] * y[idx[modes[1] - 1]]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def slice222():
    """``A(:,:,1) = [1 2; 3 4]``, ``A(:,:,2) = [5 6; 7 8]``."""
    A = np.zeros((2, 2, 2))
    A[:, :, 0] = [[1, 2], [3, 4]]
    A[:, :, 1] = [[5, 6], [7, 8]]
    return A


# acceptance reporting --------------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


@pytest.fixture
def criterion(request):
    """Record a measured detail for the acceptance summary line."""
    marker = request.node.get_closest_marker("criterion")
    n, title = marker.args
    entry = _CRITERIA.setdefault(n, {"title": title, "details": [], "outcomes": []})

    def note(text):
        entry["details"].append(str(text))

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    n, title = marker.args
    entry = _CRITERIA.setdefault(n, {"title": title, "details": [], "outcomes": []})
    if report.when == "call" or report.failed:
        entry["outcomes"].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        ok = bool(e["outcomes"]) and all(e["outcomes"])
        detail = "; ".join(e["details"])
        tr.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {e['title']}"
                      + (f"  [{detail}]" if detail else ""))
