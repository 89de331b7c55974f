"""Limit maps ``L_phi = lim t phi (I + t phi)^{-1}`` and the q-subordination order."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, ToleranceConfig
from .errors import LimitHypothesisError, NotCompletelyPositiveError, QMapError, SingularResolventError
from .forms import rank2_canonical, rank2_witness
from .resolvent import (
    QPositivityVerdict,
    certify_q_positive,
    has_no_negative_eigenvalues,
    resolvent_map,
    scan_cp_family,
    spectrum,
)
from .superop import (
    Superoperator,
    compress,
    dagger,
    is_completely_positive,
    kraus_decomposition,
)

DominanceVerdict = QPositivityVerdict

CROSSCHECK_T = 1e6
CROSSCHECK_TOL = 1e-6
RICHARDSON_T = (1e3, 1e4, 1e5, 1e6)


@dataclass(frozen=True)
class LimitReport:
    limit: Superoperator
    method: str  # "spectral" or "numeric_fallback"
    property_residuals: dict = field(default_factory=dict)
    crosscheck_error: float = float("nan")
    norm_proxy: float = float("nan")


def _orth_bases(action: np.ndarray, cfg: ToleranceConfig):
    """Orthonormal bases of the range and of the nullspace, plus the rank."""
    U, s, Vh = np.linalg.svd(action)
    r = 0 if s.size == 0 or s[0] == 0 else int(np.sum(s > cfg.rank_tol * s[0]))
    return U[:, :r], dagger(Vh[r:]), r


def _spectral_projection(phi: Superoperator, cfg: ToleranceConfig) -> np.ndarray:
    """Projection onto ``range(phi)`` along ``null(phi)``, i.e. ``I - P_0``."""
    R, K, r = _orth_bases(phi.action, cfg)
    if r == 0:
        return np.zeros_like(phi.action)
    B = np.hstack([R, K])
    if np.linalg.cond(B) > cfg.cond_guard:
        raise LimitHypothesisError(
            "limit hypothesis violated: eigenvalue 0 is not semisimple (range meets nullspace)"
        )
    coeffs = np.linalg.solve(B, np.eye(B.shape[0]))
    return R @ coeffs[:r]


def _smallest_nonzero_modulus(phi: Superoperator) -> float:
    ev = np.abs(spectrum(phi))
    top = ev.max(initial=0.0)
    nz = ev[ev > 1e-6 * max(top, 1.0)]
    return float(nz.min()) if nz.size else 1.0


def _richardson(phi: Superoperator, cfg: ToleranceConfig) -> np.ndarray:
    """Polynomial extrapolation of ``t phi (I + t phi)^{-1}`` to ``h = 1/t = 0``."""
    scale = max(1.0, 1.0 / _smallest_nonzero_modulus(phi))
    ts = [t * scale for t in RICHARDSON_T]
    hs = [1.0 / t for t in ts]
    values = [t * resolvent_map(phi, t, cfg).action for t in ts]
    est = np.zeros_like(values[0])
    for i, hi in enumerate(hs):
        w = 1.0
        for j, hj in enumerate(hs):
            if j != i:
                w *= hj / (hj - hi)
        est = est + w * values[i]
    return est


def limit_map(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> LimitReport:
    """``L_phi`` as the spectral projection complementary to eigenvalue 0.

    The projection is checked against ``t phi (I + t phi)^{-1}`` at large ``t``;
    when they disagree a Richardson extrapolation is returned instead.
    """
    if not has_no_negative_eigenvalues(phi, cfg):
        raise LimitHypothesisError("limit hypothesis violated: map has a negative eigenvalue")
    P = _spectral_projection(phi, cfg)
    method = "spectral"
    try:
        t = CROSSCHECK_T * max(1.0, 1.0 / _smallest_nonzero_modulus(phi))
        err = float(np.linalg.norm(P - t * resolvent_map(phi, t, cfg).action, 2))
        if err > CROSSCHECK_TOL:
            est = _richardson(phi, cfg)
            err = float(np.linalg.norm(P - est, 2))
            if err > CROSSCHECK_TOL:
                P, method = est, "numeric_fallback"
    except SingularResolventError:
        err = float("nan")
    L = Superoperator(P)
    residuals = verify_limit_properties(phi, L, cfg)
    return LimitReport(L, method, residuals, err, float(np.linalg.norm(L.unit_image(), 2)))


def _range_projector(action, cfg):
    R, _, _ = _orth_bases(action, cfg)
    return R @ dagger(R)


def _null_projector(action, cfg):
    _, K, _ = _orth_bases(action, cfg)
    return K @ dagger(K)


def verify_limit_properties(phi: Superoperator, L: Superoperator, cfg: ToleranceConfig = DEFAULT) -> dict:
    """Residuals of the properties a limit map must have (all zero when exact)."""
    A, P = phi.action, L.action
    nrm = lambda X: float(np.linalg.norm(X, 2))  # noqa: E731
    zero = not np.any(np.abs(A) > 0)
    cp = is_completely_positive(L, cfg)
    return {
        "idempotency": nrm(P @ P - P),
        "left_intertwining": nrm(P @ A - A),
        "right_intertwining": nrm(A @ P - A),
        "range": nrm(_range_projector(A, cfg) - _range_projector(P, cfg)),
        "nullspace": nrm(_null_projector(A, cfg) - _null_projector(P, cfg)),
        "norm": 0.0 if zero else abs(nrm(L.unit_image()) - 1.0),
        "cp": max(0.0, -cp.min_eig) if not cp.ok else 0.0,
    }


def is_idempotent_ucp(Phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> bool:
    tol = cfg.rank_tol
    return (
        Phi.is_unital(tol)
        and is_completely_positive(Phi, cfg).ok
        and float(np.linalg.norm(Phi.action @ Phi.action - Phi.action, 2)) <= tol
    )


def subordinate(phi: Superoperator, s: float, cfg: ToleranceConfig = DEFAULT) -> Superoperator:
    """The trivial q-subordinate ``phi (I + s phi)^{-1}``."""
    return resolvent_map(phi, s, cfg)


def q_dominates(phi: Superoperator, psi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> DominanceVerdict:
    """Sampled test of ``phi >=_q psi``."""
    if not (has_no_negative_eigenvalues(phi, cfg) and has_no_negative_eigenvalues(psi, cfg)):
        raise QMapError("dominance needs maps without negative eigenvalues")

    def family(t):
        return (1.0 + t) * (resolvent_map(phi, t, cfg) - resolvent_map(psi, t, cfg))

    def limit():
        return limit_map(phi, cfg).limit - limit_map(psi, cfg).limit

    return scan_cp_family(family, limit, cfg)


def rank2_m2_subordinate_witness(lam: float, lam_prime: float):
    """Rank-2 canonical map on ``M_2`` and its rank-one q-subordinate."""
    if not (0 < lam <= 1 and 0 <= lam_prime < 1 and lam > lam_prime):
        raise ValueError(f"need 0 <= lam' < lam <= 1 with lam in (0,1]; got ({lam}, {lam_prime})")
    return rank2_canonical(lam, lam_prime), rank2_witness(lam, lam_prime)


def annihilated_vectors(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> np.ndarray:
    """Orthonormal columns spanning ``{x : phi(x x^*) = 0}`` for a CP map.

    With Kraus operators ``S_i`` this is the common kernel of the ``S_i``.
    """
    kraus = kraus_decomposition(phi, cfg)
    if not kraus:
        return np.eye(phi.n, dtype=complex)
    stacked = np.vstack(kraus)
    _, s, Vh = np.linalg.svd(stacked)
    scale = max(s[0], 1.0) if s.size else 1.0
    # the Kraus operators scale like sqrt(phi), so the cut uses sqrt(rank_tol)
    r = int(np.sum(s > np.sqrt(cfg.rank_tol) * scale))
    return dagger(Vh[r:])


def _phase_normalize(x: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(x) > 1e-12 * np.abs(x).max()))
    return x * (abs(x[k]) / x[k])


def unitary_with_first_column(x: np.ndarray) -> np.ndarray:
    """Unitary ``Z`` with ``Z e_1 = x`` (so ``Z^* (x x^*) Z = e_11``)."""
    x = np.asarray(x, dtype=complex)
    x = x / np.linalg.norm(x)
    n = x.size
    M = np.column_stack([x, np.eye(n, dtype=complex)])
    Q = np.linalg.qr(M)[0][:, :n]
    Q[:, 0] = x  # QR returns x up to a phase
    return Q


@dataclass(frozen=True)
class AnnihilatorWitness:
    phi_prime: Superoperator
    projection: np.ndarray
    conjugator: np.ndarray
    q_positivity: QPositivityVerdict
    dominance: DominanceVerdict
    min_distance: float
    compression_gap: float

    @property
    def passes(self) -> bool:
        return (
            self.q_positivity.tag != "refuted"
            and self.dominance.tag != "refuted"
            and self.min_distance > 1e-6
            and self.compression_gap > 1e-6
        )


def annihilator_compression_witness(phi: Superoperator, cfg: ToleranceConfig = DEFAULT):
    """Non-trivial q-subordinate ``F phi(.) F`` of a map killing a rank-one projection.

    Returns ``None`` when ``phi`` annihilates no nonzero positive matrix.
    """
    try:
        null = annihilated_vectors(phi, cfg)
    except NotCompletelyPositiveError:
        return None
    if null.shape[1] == 0:
        return None
    x = _phase_normalize(null[:, 0])
    E = np.outer(x, x.conj())
    F = np.eye(phi.n) - E
    phi_prime = compress(phi, F)
    q_pos = certify_q_positive(phi_prime, cfg)
    dom = q_dominates(phi, phi_prime, cfg)

    # distance to the trivial subordinates (s in the compactified grid) and to 0
    s_grid = np.linspace(0.0, cfg.t_cap / (1 + cfg.t_cap), cfg.grid_points)
    dists, gaps = [phi_prime.norm()], []
    unit_prime = float(np.real(x.conj() @ phi_prime.unit_image() @ x))
    for sv in s_grid:
        t = sv / (1 - sv)
        try:
            sub = subordinate(phi, t, cfg)
        except SingularResolventError:
            continue
        dists.append(phi_prime.distance(sub))
        gaps.append(abs(float(np.real(x.conj() @ sub.unit_image() @ x)) - unit_prime))
    return AnnihilatorWitness(
        phi_prime, E, unitary_with_first_column(x), q_pos, dom,
        float(min(dists)), float(min(gaps)) if gaps else 0.0,
    )
