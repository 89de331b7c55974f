"""Corners between maps, the flip construction, and compression witnesses."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, ToleranceConfig
from .errors import DimensionError
from .forms import schur_qpos_mask
from .limits import DominanceVerdict, limit_map, q_dominates
from .resolvent import QPositivityVerdict, certify_q_positive
from .superop import (
    CPCheck,
    RectangularMap,
    Superoperator,
    assemble_block_map,
    compress,
    conjugate_map,
    dagger,
    is_completely_positive,
    is_psd,
    is_unitary,
    min_eigenvalue,
    schur_map,
    split_block_map,
)

WITNESS_TOL = 1e-8


@dataclass(frozen=True)
class CornerProblem:
    phi: Superoperator
    psi: Superoperator
    gamma: RectangularMap
    upsilon: Superoperator = field(repr=False)

    @classmethod
    def build(cls, phi: Superoperator, gamma: RectangularMap, psi: Superoperator) -> "CornerProblem":
        return cls(phi, psi, gamma, assemble_block_map(phi, gamma, psi))

    @classmethod
    def from_block_map(cls, upsilon: Superoperator, n: int) -> "CornerProblem":
        phi, gamma, psi = split_block_map(upsilon, n)
        return cls(phi, psi, gamma, upsilon)

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def k(self) -> int:
        return self.psi.n


def corner_cp(p: CornerProblem, cfg: ToleranceConfig = DEFAULT) -> CPCheck:
    return is_completely_positive(p.upsilon, cfg)


def is_corner(p: CornerProblem, cfg: ToleranceConfig = DEFAULT) -> bool:
    return corner_cp(p, cfg).ok


def is_q_corner(p: CornerProblem, cfg: ToleranceConfig = DEFAULT) -> QPositivityVerdict:
    return certify_q_positive(p.upsilon, cfg)


def flip_corner(phi: Superoperator, U, cfg: ToleranceConfig = DEFAULT) -> CornerProblem:
    """Corner ``gamma(A) = phi(A U^*) U`` from ``phi`` to ``phi_U``."""
    U = np.asarray(U, dtype=complex)
    n = phi.n
    if U.shape != (n, n):
        raise DimensionError(f"unitary must be {n}x{n}")
    gamma = RectangularMap.from_function(lambda A: phi(A @ dagger(U)) @ U, (n, n))
    return CornerProblem.build(phi, gamma, conjugate_map(phi, U))


def flip_forcing_check(X, Y, U, cfg: ToleranceConfig = DEFAULT) -> dict:
    """Positivity of ``[[X, U], [U^*, Y]]`` for contractions ``0 <= X, Y <= I``.

    With ``U`` unitary the block matrix can only be positive when ``X = Y = I``.
    """
    X, Y, U = (np.asarray(M, dtype=complex) for M in (X, Y, U))
    n = X.shape[0]
    block = np.block([[X, U], [dagger(U), Y]])
    return {
        "unitary": is_unitary(U),
        "block_psd": bool(is_psd(block, cfg)),
        "block_min_eig": min_eigenvalue(block),
        "diagonal_defect": float(max(np.linalg.norm(X - np.eye(n), 2), np.linalg.norm(Y - np.eye(n), 2))),
    }


def limit_corner(p: CornerProblem, cfg: ToleranceConfig = DEFAULT) -> RectangularMap:
    """Top-right block ``sigma`` of ``L_upsilon``."""
    L = limit_map(p.upsilon, cfg).limit
    return split_block_map(L, p.n)[1]


def rectangular_idempotency(sigma: RectangularMap) -> float:
    return float(np.linalg.norm(sigma.action @ sigma.action - sigma.action, 2))


def projection_label(diagonal) -> str:
    """``'e11+e33+e44'`` for the 0/1 diagonal ``(1, 0, 1, 1)``."""
    return "+".join(f"e{i + 1}{i + 1}" for i, d in enumerate(diagonal) if d)


@dataclass(frozen=True)
class HypermaxWitness:
    theta_prime: Superoperator
    compression: np.ndarray
    label: str
    dominance: DominanceVerdict
    q_positivity: QPositivityVerdict
    inequality_evidence: float
    corner_defect: float

    def is_valid(self, tol: float = WITNESS_TOL) -> bool:
        return (
            self.inequality_evidence > tol
            and self.corner_defect <= tol
            and self.dominance.tag != "refuted"
            and self.q_positivity.tag != "refuted"
        )


def compression_family(size: int):
    """Diagonal projections removing one, then two, basis vectors, in index order."""
    for r in (1, 2):
        for removed in itertools.combinations(range(size), r):
            d = np.ones(size)
            d[list(removed)] = 0
            yield d


def hypermax_refutation_search(p: CornerProblem, cfg: ToleranceConfig = DEFAULT) -> HypermaxWitness | None:
    """First compression ``P Theta(.) P`` that is a non-trivial q-subordinate keeping ``gamma``."""
    theta = p.upsilon
    gamma_norm = max(1.0, p.gamma.norm())
    for d in compression_family(theta.n):
        P = np.diag(d).astype(complex)
        theta_p = compress(theta, P)
        discrepancy = theta_p.distance(theta)
        if discrepancy <= WITNESS_TOL:
            continue
        _, gamma_p, _ = split_block_map(theta_p, p.n)
        corner_defect = gamma_p.distance(p.gamma)
        if corner_defect > WITNESS_TOL * gamma_norm:
            continue
        q_pos = certify_q_positive(theta_p, cfg)
        if q_pos.refuted:
            continue
        dom = q_dominates(theta, theta_p, cfg)
        if dom.refuted:
            continue
        phi_p, _, psi_p = split_block_map(theta_p, p.n)
        evidence = phi_p.distance(p.phi) + psi_p.distance(p.psi)
        return HypermaxWitness(theta_p, P, projection_label(d), dom, q_pos, evidence, corner_defect)
    return None


@dataclass(frozen=True)
class RankObstruction:
    step: str  # "low_rank" or "full_rank"
    matrix: np.ndarray
    vector: np.ndarray
    value: float
    index: tuple[int, int] | None = None


def rank_obstruction(density, sigma: RectangularMap, cfg: ToleranceConfig = DEFAULT) -> RankObstruction | None:
    """Negative direction showing ``sigma`` cannot sit in ``L_Theta`` over a faithful state.

    ``density`` is the density of the state ``rho`` with ``phi(A) = rho(A) I``.
    Returns ``None`` when ``sigma`` is zero.
    """
    D = np.asarray(density, dtype=complex)
    n, k = sigma.out_shape
    images = []
    for i in range(n):
        for j in range(k):
            E = np.zeros((n, k), dtype=complex)
            E[i, j] = 1
            M = sigma(E)
            if np.linalg.norm(M) > cfg.rank_tol:
                images.append(((i, j), M))
    if not images:
        return None

    for idx, M in images:
        A = M / np.linalg.norm(M, 2)
        U, s, _ = np.linalg.svd(A)
        r = int(np.sum(s > cfg.rank_tol * s[0]))
        if r < n:
            Pr = U[:, :r] @ dagger(U[:, :r])
            rho_P = float(np.real(np.trace(D @ Pr)))
            R = np.block([[rho_P * np.eye(n), A], [dagger(A), np.eye(k)]])
            w, V = np.linalg.eigh(R)
            return RankObstruction("low_rank", R, V[:, 0], float(w[0]), idx)

    (i, j), M = images[0]
    Ejj = np.zeros((k, k))
    Ejj[j, j] = 1
    rho_ii = float(np.real(D[i, i]))
    R = np.block([[rho_ii * np.eye(n), M], [dagger(M), Ejj]])
    m = next(c for c in range(k) if c != j and np.linalg.norm(M[:, c]) > cfg.rank_tol)
    g = np.zeros(k, dtype=complex)
    g[m] = 1
    v = np.concatenate([M @ g, -2.0 * g])
    return RankObstruction("full_rank", R, v, float(np.real(v.conj() @ R @ v)), (i, j))


def schur_corner_problem(lams=(0.6, -0.2, -0.4), x: float = 0.0, decoupled: int = 1) -> CornerProblem:
    """Diagonal map vs unital invertible q-positive Schur map, with a Schur corner.

    The 4x4 mask couples the indices other than ``decoupled`` through a
    q-positive 3x3 Schur mask; the decoupled index only keeps its diagonal 1.
    ``decoupled`` must be 0 or 1 so the top-left block stays the diagonal map.
    """
    if decoupled not in (0, 1):
        raise ValueError("decoupled index must be 0 or 1")
    coupled = [i for i in range(4) if i != decoupled]
    N = np.zeros((4, 4), dtype=complex)
    N[np.ix_(coupled, coupled)] = schur_qpos_mask(lams, x)
    N[decoupled, decoupled] = 1
    return CornerProblem.from_block_map(schur_map(N), 2)


def pure_state_corner_problem() -> CornerProblem:
    """``phi(A) = a22 I`` on ``M_2``, ``psi = id`` and ``gamma(B) = e22 B``."""
    P = np.diag([0, 1, 1, 1]).astype(complex)

    def theta(X):
        out = P @ X @ P
        out[0, 0] += X[1, 1]
        return out

    return CornerProblem.from_block_map(Superoperator.from_function(theta, 4), 2)
