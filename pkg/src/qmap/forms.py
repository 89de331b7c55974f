"""Constructors for the concrete maps used throughout the package."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .superop import Superoperator, schur_map, superop_from_kraus, matrix_unit

SQRT2 = np.sqrt(2.0)


def state_map(weights: Sequence[float] | None = None, density=None) -> Superoperator:
    """``A -> rho(A) I`` where ``rho(A) = tr(D A)``.

    Pass either the diagonal ``weights`` of ``D`` or the full density matrix.
    """
    if (weights is None) == (density is None):
        raise ValueError("give exactly one of weights or density")
    D = np.diag(np.asarray(weights, dtype=complex)) if density is None else np.asarray(density, dtype=complex)
    n = D.shape[0]
    # column (i, j) is rho(e_ij) vec(I) = D[j, i] vec(I)
    return Superoperator(np.outer(np.eye(n).reshape(-1), D.T.reshape(-1)))


def state_density(phi: Superoperator) -> np.ndarray:
    """Density ``D`` of a map known to be ``A -> tr(D A) I``."""
    n = phi.n
    rho = phi.action[0].reshape(n, n)  # rho(e_ij) = phi(e_ij)[0, 0]
    return rho.T.copy()


def diagonal_map(n: int = 2) -> Superoperator:
    return schur_map(np.eye(n))


def rank2_canonical(lam: float, lam_prime: float) -> Superoperator:
    """``diag(lam a11 + (1-lam) a22, lam' a11 + (1-lam') a22)`` on ``M_2``."""
    def f(A):
        return np.diag([lam * A[0, 0] + (1 - lam) * A[1, 1],
                        lam_prime * A[0, 0] + (1 - lam_prime) * A[1, 1]])
    return Superoperator.from_function(f, 2)


def rank2_witness(lam: float, lam_prime: float) -> Superoperator:
    """The rank-one q-subordinate ``A -> Q a11 / (1 - lam') e11`` of the rank-2 form."""
    c = (lam - lam_prime) / (1 - lam_prime)
    return Superoperator.from_function(lambda A: c * A[0, 0] * matrix_unit(0, 0, 2), 2)


def _rho23(lam: float, A) -> complex:
    return lam * A[1, 1] + (1 - lam) * A[2, 2]


def e3_form(family: str, lam: float | None = None) -> Superoperator:
    """Canonical representatives of the idempotent unital CP maps on ``M_3``."""
    def f(A):
        out = np.zeros((3, 3), dtype=complex)
        if family == "E3_I":
            return _rho23(lam, A) * np.eye(3)
        if family == "E3_II":
            out[0, 0] = _rho23(lam, A)
            out[1, 1], out[2, 2] = A[1, 1], A[2, 2]
        elif family == "E3_III":
            out[0, 0] = _rho23(lam, A)
            out[1:, 1:] = A[1:, 1:]
        elif family == "E3_IV":
            out = np.diag(np.diag(A)).astype(complex)
        elif family == "E3_V":
            out[0, 0] = A[0, 0]
            out[1:, 1:] = A[1:, 1:]
        elif family == "E3_VI":
            out[0, 0] = A[0, 0]
            out[1, 1] = out[2, 2] = _rho23(lam, A)
        elif family == "E3_VII":
            out = np.array(A, dtype=complex)
        else:
            raise ValueError(f"unknown E3 family {family!r}")
        return out

    return Superoperator.from_function(f, 3)


E3_RANKS = {"E3_state": 1, "E3_I": 1, "E3_II": 2, "E3_III": 4, "E3_IV": 3,
            "E3_V": 5, "E3_VI": 2, "E3_VII": 9}


def phi_r_mask(r: float) -> np.ndarray:
    return np.array([[1, r * (1 + 1j) / 2], [r * (1 - 1j) / 2, 1]])


def phi_r_family(r: float) -> Superoperator:
    """Schur map whose resolvents stop being CP past ``(2 - r^2) / (2r(r - 1))``."""
    if not 1 < r <= SQRT2 + 1e-12:
        raise ValueError(f"r must lie in (1, sqrt(2)], got {r}")
    return schur_map(phi_r_mask(r))


def phi_r_threshold(r: float) -> float:
    return (2 - r * r) / (2 * r * (r - 1))


def schur_qpos_mask(lams: Sequence[float], x: float = 0.0) -> np.ndarray:
    """Mask ``1 / (1 + x + i(lam_j - lam_k))`` off the diagonal, 1 on it.

    Its inverse Schur map is ``A -> A + Y A + A Y^* + x (A - diag(A))``, which is
    conditionally negative for ``x >= 0``; ``x = 0`` gives the q-pure family.
    """
    lams = np.asarray(lams, dtype=float)
    D = 1 + x + 1j * (lams[:, None] - lams[None, :])
    np.fill_diagonal(D, 1.0)
    return 1.0 / D


def qpure_invertible_canonical(lams: Sequence[float], tol: float = 1e-9) -> Superoperator:
    """Schur map with mask ``1 / (1 + i(lam_j - lam_k))``; the ``lams`` sum to zero."""
    lams = np.asarray(lams, dtype=float)
    if abs(lams.sum()) > tol * max(1.0, np.abs(lams).max(initial=0.0)):
        raise ValueError(f"lambdas must sum to 0, got sum {lams.sum():.3g}")
    return schur_map(schur_qpos_mask(lams))


def rank3_unital_map() -> Superoperator:
    """Rank-3 unital CP map on ``M_2`` that is not q-positive."""
    S = np.array([[0, 1], [1, 0]])
    kraus = [np.eye(2), S, matrix_unit(0, 0, 2), matrix_unit(1, 1, 2)]
    return superop_from_kraus(2, [k / np.sqrt(3) for k in kraus])


def sign_flip_map() -> Superoperator:
    """CP Schur map with eigenvalue -1."""
    return schur_map(np.array([[1, -1], [-1, 1]]))
