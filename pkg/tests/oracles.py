"""Independent reference implementations used to check the library.

Nothing here goes through the Choi matrix or the action-matrix helpers of
the package; maps are only ever evaluated on matrices.
"""
import itertools

import numpy as np


def amplified_image(phi, v):
    """``(id (x) phi)(v v^*)`` for ``v`` in ``C^n (x) C^n``, built block by block."""
    n = phi.n
    X = np.asarray(v, dtype=complex).reshape(n, n)  # row i is the component x_i
    out = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[i * n:(i + 1) * n, j * n:(j + 1) * n] = phi(np.outer(X[i], X[j].conj()))
    return out


def brute_force_cp(phi, probes=500, eig_floor=1e-9, rng=None):
    """CP verdict from random rank-one positive inputs to ``id (x) phi``."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = phi.n
    for _ in range(probes):
        v = rng.normal(size=n * n) + 1j * rng.normal(size=n * n)
        v /= np.linalg.norm(v)
        M = amplified_image(phi, v)
        M = 0.5 * (M + M.conj().T)
        if np.linalg.eigvalsh(M)[0] < -eig_floor * (1 + np.linalg.norm(M, 2)):
            return False
    return True


def schur_apply(mask, A):
    return np.asarray(mask) * np.asarray(A)


def resolvent_by_series_free_solve(phi, t):
    """``phi (I + t phi)^{-1}`` evaluated on each matrix unit by solving ``X + t phi(X) = A``.

    The linear system is assembled from evaluations of ``phi`` only.
    """
    n = phi.n
    units = [np.eye(n * n)[k].reshape(n, n) for k in range(n * n)]
    T = np.column_stack([(E + t * phi(E)).ravel() for E in units])
    images = {}
    for (i, j) in itertools.product(range(n), repeat=2):
        E = np.zeros((n, n), dtype=complex)
        E[i, j] = 1
        X = np.linalg.solve(T, E.ravel()).reshape(n, n)
        images[i, j] = phi(X)
    return images


def phi_r_resolvent_min_det(r, t):
    """Determinant of the 2x2 mask of the resolvent of ``phi_r`` at ``t``.

    The mask is ``[[1/(1+t), z], [conj z, 1/(1+t)]]`` with
    ``z = m / (1 + t m)`` and ``m = r (1 + i) / 2``.
    """
    m = r * (1 + 1j) / 2
    z = m / (1 + t * m)
    d = 1 / (1 + t)
    return d * d - abs(z) ** 2
