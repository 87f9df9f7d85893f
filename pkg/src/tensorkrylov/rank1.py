"""Best rank-(1,1,1) approximation by alternating maximization."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_generator, check_tensor
from .tensor import frob_norm, gram, tvv


@dataclass
class Rank1Triple:
    """Unit vectors ``theta``, ``eta``, ``omega`` and ``sigma = <C; theta, eta, omega>``."""

    theta: np.ndarray
    eta: np.ndarray
    omega: np.ndarray
    sigma: float
    n_iter: int = 0
    history: list = field(default_factory=list)


def _unit(x):
    nrm = np.linalg.norm(x)
    return x / nrm if nrm > 0 else x


def _leading_eigvec(G):
    _, vecs = np.linalg.eigh(G)
    return vecs[:, -1]


def _hooi(C, theta, eta, omega, iters, tol):
    sigma = abs(float(omega @ tvv(C, (1, 2), theta, eta)))
    history = [sigma]
    n_iter = 0
    for n_iter in range(1, iters + 1):
        theta = _unit(tvv(C, (2, 3), eta, omega))
        eta = _unit(tvv(C, (1, 3), theta, omega))
        w = tvv(C, (1, 2), theta, eta)
        new = float(np.linalg.norm(w))
        omega = _unit(w)
        history.append(new)
        done = new - sigma <= tol * new
        sigma = new
        if done:
            break
    return Rank1Triple(theta, eta, omega, sigma, n_iter, history)


def best_rank111(C, iters=50, tol=1e-10, init=None, n_restarts=0, random_state=None):
    """Best rank-(1,1,1) approximation ``sigma * theta o eta o omega`` of ``C``.

    Alternating maximization (higher-order power iteration): each sweep
    replaces ``theta``, ``eta`` and ``omega`` in turn by the normalized
    contraction of ``C`` with the other two. The objective never decreases.

    Parameters
    ----------
    C : ndarray or SparseTensor3
    iters : int
        Maximum number of sweeps.
    tol : float
        Stop when a sweep improves ``sigma`` by at most ``tol * sigma``.
    init : tuple, optional
        ``(theta, eta)`` or ``(theta, eta, omega)`` to start from instead of
        the leading HOSVD vectors. A missing ``omega`` is set to the
        normalized ``C(theta, eta, .)``.
    n_restarts : int
        Extra runs from random starts; the best result is returned.

    Returns
    -------
    Rank1Triple
    """
    C = check_tensor(C)
    if frob_norm(C) == 0:
        raise ValueError("best rank-(1,1,1) approximation of a zero tensor is undefined")
    if init is None:
        theta, eta, omega = (_leading_eigvec(gram(C, m)) for m in (1, 2, 3))
    else:
        theta, eta = (_unit(np.asarray(x, dtype=np.float64)) for x in init[:2])
        omega = init[2] if len(init) > 2 and init[2] is not None else tvv(C, (1, 2), theta, eta)
        omega = _unit(np.asarray(omega, dtype=np.float64))
    best = _hooi(C, theta, eta, omega, iters, tol)
    rng = as_generator(random_state)
    for _ in range(n_restarts):
        start = [_unit(rng.standard_normal(d)) for d in C.shape]
        cand = _hooi(C, *start, iters, tol)
        if cand.sigma > best.sigma:
            best = cand
    return best
