"""Post-hoc checks of the factorization identities of a Krylov run."""

import numpy as np

from ..tensor import frob_norm, ttm, ttm_multi, tvv
from .minimal import other_modes

FAMILY = {1: "u", 2: "v", 3: "w"}


def factorization_residuals(A, state, tol=1e-10, coefficients=True):
    """Evaluate every identity a recursion state should satisfy.

    Families, each reported as the maximum residual relative to ``||A||``:

    ``fibre-u``, ``fibre-v``, ``fibre-w``
        For every recorded candidate, ``A(x, y) = Q[:, :n] h`` with the
        stored Gram-Schmidt coefficients ``h``. For the minimal recursion
        these are the partial factorization fibres, e.g.
        ``<A; V_k, W_k>_{-1}(:, i, i) = U_k H^u(:, i)``.
    ``loop-u``, ``loop-v``, ``loop-w``
        For every complete loop of the maximal recursion, e.g.
        ``<A; V, W>_{-1} = H x_1 U`` with the stored coefficient tensor.
    ``coefficients``
        Filled entries of ``H`` against ``<A; u_a, v_b, w_c>``.
    ``orthogonality``
        Largest deviation of any ``Q^T Q`` from the identity (absolute).

    Returns
    -------
    dict
        Family name -> residual, plus ``'max'`` and ``'ok'`` (all residuals
        at most ``tol``).
    """
    nA = frob_norm(A) or 1.0
    report = {}
    Q = {m: state.bases[m].Q for m in (1, 2, 3)}

    for r in state.records:
        a, b = other_modes(r.mode)
        x = Q[a][:, : len(r.x)] @ r.x
        y = Q[b][:, : len(r.y)] @ r.y
        lhs = tvv(A, (a, b), x, y)
        rhs = Q[r.mode][:, : len(r.coeffs)] @ r.coeffs
        key = "fibre-" + FAMILY[r.mode]
        report[key] = max(report.get(key, 0.0), float(np.linalg.norm(lhs - rhs)) / nA)

    H = state.H.values
    for loop in state.loops:
        if not loop.complete:
            continue
        m = loop.mode
        box = H[tuple(slice(0, s) for s in loop.sizes)]
        factors = [Q[o][:, : loop.sizes[o - 1]] if o != m else None for o in (1, 2, 3)]
        lhs = ttm_multi(A, factors, transpose=True)
        rhs = ttm(box, Q[m][:, : loop.sizes[m - 1]], m)
        key = "loop-" + FAMILY[m]
        res = float(np.linalg.norm((lhs - rhs).ravel())) / nA
        report[key] = max(report.get(key, 0.0), res)

    mask = state.H.mask
    if coefficients and mask.any():
        a, b, c = H.shape
        from ..tucker import core_project

        core = core_project(A, Q[1][:, :a], Q[2][:, :b], Q[3][:, :c], check=False)
        report["coefficients"] = float(np.max(np.abs(H[mask] - core[mask]))) / nA

    report["orthogonality"] = state.orthogonality_error()
    residuals = [v for k, v in report.items()]
    report["max"] = max(residuals)
    report["ok"] = bool(report["max"] <= tol)
    return report
