"""Canonical forms of idempotent UCP maps on M_2, M_3 and unital q-positive maps on M_2.

Every result carries a conjugator ``X`` with ``conjugate_map(canonical, X)``
equal to the input, and is verified by reconstruction before it is returned.

Conjugate forms are identified, so each family needs a representative:
state weights are listed in increasing order, the E_3 forms that are
symmetric under swapping the last two basis vectors use ``lambda <= 1/2``,
and the rank-2 maps on M_2 use ``lambda + lambda' >= 1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, ToleranceConfig
from .errors import ClassificationError, DimensionError, RankThreeError, SingularResolventError
from .forms import (
    diagonal_map,
    e3_form,
    qpure_invertible_canonical,
    rank2_canonical,
    state_density,
    state_map,
)
from .limits import annihilated_vectors, is_idempotent_ucp, limit_map, unitary_with_first_column
from .resolvent import certify_q_positive
from .superop import Superoperator, conjugate_map, dagger, haar_unitary, is_schur_map

VERIFY_TOL = 1e-7
GENERATOR_TOL = 1e-8

E2_FAMILIES = ("E2_state", "E2_diagonal", "E2_identity")
E3_FAMILIES = ("E3_state", "E3_I", "E3_II", "E3_III", "E3_IV", "E3_V", "E3_VI", "E3_VII")
M2_FAMILIES = ("M2_rank1", "M2_rank2", "M2_invertible")

FORM_NAMES = {
    "E2_state": "E2 form (i), A -> rho(A) I",
    "E2_diagonal": "E2 form (ii), diagonal map",
    "E2_identity": "E2 form (iii), identity",
    "E3_state": "E3 faithful-state form, A -> rho(A) I",
    "E3_I": "E3 form (I)",
    "E3_II": "E3 form (II)",
    "E3_III": "E3 form (III)",
    "E3_IV": "E3 form (IV)",
    "E3_V": "E3 form (V)",
    "E3_VI": "E3 form (VI)",
    "E3_VII": "E3 form (VII)",
    "M2_rank1": "M2 class (i), A -> rho(A) I",
    "M2_rank2": "M2 class (ii), rank-2 diagonal form",
    "M2_invertible": "M2 class (iii), invertible",
}

_SWAP2 = np.array([[0, 1], [1, 0]], dtype=complex)
_G = np.array([[0, 1, 0], [0, 0, 1]], dtype=complex)
_E3_MASKS = {
    "E3_IV": np.eye(3),
    "E3_V": np.array([[1, 0, 0], [0, 1, 1], [0, 1, 1]], dtype=float),
    "E3_VII": np.ones((3, 3)),
}


@dataclass(frozen=True)
class GeneratorExtraction:
    Y: np.ndarray
    residual: float
    skew_defect: float
    trace_defect: float

    def is_qpure_canonical(self, tol: float = GENERATOR_TOL) -> bool:
        return max(self.residual, self.skew_defect, self.trace_defect) <= tol


@dataclass(frozen=True)
class CanonicalForm:
    family: str
    params: dict
    conjugator: np.ndarray
    residual: float = 0.0
    generator: GeneratorExtraction | None = field(default=None, compare=False)

    def canonical_map(self) -> Superoperator:
        return reconstruct(self.family, self.params)

    def reconstructed(self) -> Superoperator:
        return conjugate_map(self.canonical_map(), self.conjugator)

    def describe(self) -> str:
        name = FORM_NAMES.get(self.family, self.family)
        bits = []
        if "lambda" in self.params:
            bits.append(f"λ={self.params['lambda']:.3f}")
        if "lambda_prime" in self.params:
            bits.append(f"λ'={self.params['lambda_prime']:.3f}")
        if "weights" in self.params:
            bits.append("weights=(" + ", ".join(f"{w:.3f}" for w in self.params["weights"]) + ")")
        if "lambdas" in self.params:
            bits.append("lambdas=(" + ", ".join(f"{w:.3f}" for w in self.params["lambdas"]) + ")")
        return name + (", " + ", ".join(bits) if bits else "")


def reconstruct(family: str, params: dict) -> Superoperator:
    """The canonical representative of ``family`` with ``params``."""
    if family in ("E2_state", "E3_state", "M2_rank1"):
        return state_map(weights=params["weights"])
    if family == "E2_diagonal":
        return diagonal_map(2)
    if family == "E2_identity":
        return Superoperator.identity(2)
    if family in E3_FAMILIES:
        return e3_form(family, params.get("lambda"))
    if family == "M2_rank2":
        return rank2_canonical(params["lambda"], params["lambda_prime"])
    if family == "M2_invertible":
        if "lambdas" in params:
            return qpure_invertible_canonical(params["lambdas"])
        return Superoperator(np.asarray(params["action"], dtype=complex))
    raise ClassificationError(f"unknown family {family!r}")


def _rank(phi: Superoperator, cfg: ToleranceConfig) -> int:
    return phi.rank(cfg.rank_tol)


def _finish(phi: Superoperator, family: str, params: dict, conjugator, generator=None) -> CanonicalForm:
    form = CanonicalForm(family, params, np.asarray(conjugator, dtype=complex), 0.0, generator)
    residual = form.reconstructed().distance(phi)
    if residual > VERIFY_TOL:
        raise ClassificationError(
            f"reconstruction of {family} misses the input by {residual:.3g}", residual
        )
    return CanonicalForm(family, params, form.conjugator, residual, generator)


def _phase_fix(V: np.ndarray) -> np.ndarray:
    """Make the first non-negligible entry of every column real and positive."""
    V = V.copy()
    for k in range(V.shape[1]):
        col = V[:, k]
        i = int(np.argmax(np.abs(col) > 1e-8))
        V[:, k] = col * (abs(col[i]) / col[i])
    return V


def _eigh_increasing(H):
    w, V = np.linalg.eigh((H + dagger(H)) / 2)
    return w, _phase_fix(V)


def _classify_state(phi: Superoperator, family: str) -> CanonicalForm:
    D = state_density(phi)
    w, V = _eigh_increasing(D)
    return _finish(phi, family, {"weights": [float(x) for x in w]}, dagger(V))


def _hermitian_fixed_points(Phi: Superoperator, cfg: ToleranceConfig) -> list[np.ndarray]:
    """Self-adjoint fixed points, most distant from the scalars first."""
    n = Phi.n
    A = Phi.action - np.eye(n * n)
    _, s, Vh = np.linalg.svd(A)
    tol = 1e-8 * max(1.0, s[0])
    basis = [Vh[k].conj().reshape(n, n) for k in range(len(s)) if s[k] <= tol]
    out = []
    for B in basis:
        for H in (B + dagger(B), 1j * (B - dagger(B))):
            H = H - np.trace(H) / n * np.eye(n)
            nrm = np.linalg.norm(H)
            if nrm > 1e-6:
                out.append(H / nrm)
    out.sort(key=lambda H: -np.linalg.norm(H - np.trace(H) / n * np.eye(n)))
    return out


def classify_E2(Phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> CanonicalForm:
    """Canonical form of an idempotent unital CP map on ``M_2``."""
    if Phi.n != 2:
        raise DimensionError("classify_E2 needs a map on M_2")
    r = _rank(Phi, cfg)
    if r == 3:
        raise RankThreeError()
    if not is_idempotent_ucp(Phi, cfg):
        raise ClassificationError("map is not an idempotent unital CP map")
    if r == 1:
        return _classify_state(Phi, "E2_state")
    if r == 2:
        fixed = _hermitian_fixed_points(Phi, cfg)
        if not fixed:
            raise ClassificationError("no non-scalar self-adjoint fixed point")
        w, V = _eigh_increasing(fixed[0])
        V = V[:, ::-1]
        return _finish(Phi, "E2_diagonal", {}, dagger(V))
    if r == 4:
        return _finish(Phi, "E2_identity", {}, np.eye(2))
    raise ClassificationError(f"unexpected rank {r} for an idempotent UCP map on M_2")


def _inner_E2(Phi_Y: Superoperator, cfg: ToleranceConfig) -> CanonicalForm:
    """Classify ``B -> G Phi_Y(G^* B G) G^*`` on the lower 2x2 corner."""
    psi = Superoperator.from_function(lambda B: _G @ Phi_Y(dagger(_G) @ B @ _G) @ dagger(_G), 2)
    return classify_E2(psi, cfg)


def _block(U2) -> np.ndarray:
    X = np.eye(3, dtype=complex)
    X[1:, 1:] = U2
    return X


_P23 = _block(_SWAP2)


def _lambda_23(Phi_Y: Superoperator, row: int) -> float:
    """Coefficient of ``a22`` in the functional on position ``(row, row)``."""
    E22 = np.zeros((3, 3), dtype=complex)
    E22[1, 1] = 1
    return float(np.real(Phi_Y(E22)[row, row]))


def _swap_to_small_lambda(Phi: Superoperator, Y, row: int):
    lam = _lambda_23(conjugate_map(Phi, Y), row)
    if lam > 0.5:
        Y = Y @ _P23
        lam = _lambda_23(conjugate_map(Phi, Y), row)
    return Y, lam


def _classify_annihilating(Phi: Superoperator, x: np.ndarray, cfg: ToleranceConfig) -> CanonicalForm:
    Z = unitary_with_first_column(x)
    inner = _inner_E2(conjugate_map(Phi, Z), cfg)
    Y = Z @ _block(dagger(inner.conjugator))
    if inner.family == "E2_state":
        family = "E3_I"
    elif inner.family == "E2_diagonal":
        family = "E3_II"
    else:
        family = "E3_III"
        # diagonalize the state sitting in the (1,1) entry
        Phi_Y = conjugate_map(Phi, Y)
        D1 = Phi_Y.action[0].reshape(3, 3)[1:, 1:].T
        _, V = _eigh_increasing(D1)
        Y = Y @ _block(V)
    Y, lam = _swap_to_small_lambda(Phi, Y, 0)
    return _finish(Phi, family, {"lambda": lam}, dagger(Y))


def _match_schur_family(Phi: Superoperator, Y, cfg: ToleranceConfig):
    for perm in itertools.permutations(range(3)):
        Yp = Y @ np.eye(3)[:, list(perm)]
        mask = is_schur_map(conjugate_map(Phi, Yp), cfg)
        if mask is None:
            return None
        for family, target in _E3_MASKS.items():
            if np.abs(mask - target).max() <= VERIFY_TOL:
                return family, Yp
    return None


def _classify_fixing(Phi: Superoperator, v: np.ndarray, cfg: ToleranceConfig) -> CanonicalForm:
    Y = unitary_with_first_column(v)
    inner = _inner_E2(conjugate_map(Phi, Y), cfg)
    Y = Y @ _block(dagger(inner.conjugator))
    if inner.family == "E2_state":
        Y, lam = _swap_to_small_lambda(Phi, Y, 1)
        return _finish(Phi, "E3_VI", {"lambda": lam}, dagger(Y))
    match = _match_schur_family(Phi, Y, cfg)
    if match is None:
        raise ClassificationError("fixed-projection reduction did not give a 0/1 Schur mask")
    family, Y = match
    return _finish(Phi, family, {}, dagger(Y))


def fixed_rank_one_projections(Phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> list[np.ndarray]:
    """Unit vectors ``v`` with ``Phi(v v^*) = v v^*`` among fixed-point eigenvectors."""
    found = []
    for H in _hermitian_fixed_points(Phi, cfg):
        _, V = _eigh_increasing(H)
        for k in range(V.shape[1] - 1, -1, -1):
            v = V[:, k]
            E = np.outer(v, v.conj())
            if np.linalg.norm(Phi(E) - E) <= 1e-8:
                found.append(v)
        if found:
            return found
    return found


def classify_E3(Phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> CanonicalForm:
    """Canonical form of an idempotent unital CP map on ``M_3``."""
    if Phi.n != 3:
        raise DimensionError("classify_E3 needs a map on M_3")
    if not is_idempotent_ucp(Phi, cfg):
        raise ClassificationError("map is not an idempotent unital CP map")
    null = annihilated_vectors(Phi, cfg)
    if null.shape[1] > 0:
        return _classify_annihilating(Phi, _phase_fix(null[:, :1])[:, 0], cfg)
    if _rank(Phi, cfg) == 1:
        return _classify_state(Phi, "E3_state")
    candidates = fixed_rank_one_projections(Phi, cfg)
    if not candidates:
        raise ClassificationError("no fixed rank-one projection found")
    last = None
    for v in candidates:
        try:
            return _classify_fixing(Phi, v, cfg)
        except ClassificationError as exc:
            last = exc
    raise last


def extract_generator_Y(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> GeneratorExtraction:
    """Least-squares ``Y`` with ``phi^{-1}(A) - A = Y A + A Y^*``."""
    n = phi.n
    cond = np.linalg.cond(phi.action)
    if not np.isfinite(cond) or cond > cfg.cond_guard:
        raise SingularResolventError(0.0, cond)
    target = np.linalg.inv(phi.action) - np.eye(n * n)
    # real-linear in (Re Y, Im Y); column for basis element B is vec of A -> B A + A B^*
    columns = []
    for scale in (1.0, 1j):
        for i in range(n):
            for j in range(n):
                B = np.zeros((n, n), dtype=complex)
                B[i, j] = scale
                op = np.kron(B, np.eye(n)) + np.kron(np.eye(n), B.conj())
                columns.append(np.concatenate([op.real.ravel(), op.imag.ravel()]))
    M = np.column_stack(columns)
    rhs = np.concatenate([target.real.ravel(), target.imag.ravel()])
    coef, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    Y = (coef[: n * n] + 1j * coef[n * n:]).reshape(n, n)
    # Y -> Y + icI does not change A -> YA + AY^*; pin Im tr Y = 0
    Y = Y - 1j * np.imag(np.trace(Y)) / n * np.eye(n)
    fitted = np.kron(Y, np.eye(n)) + np.kron(np.eye(n), Y.conj())
    return GeneratorExtraction(
        Y,
        float(np.linalg.norm(fitted - target)),
        float(np.linalg.norm(Y + dagger(Y))),
        float(abs(np.trace(Y))),
    )


def canonical_rank2_params(phi: Superoperator, cfg: ToleranceConfig = DEFAULT):
    """``(lambda, lambda', X)`` with ``conjugate_map(rank2_canonical(...), X) == phi``."""
    L = limit_map(phi, cfg).limit
    inner = classify_E2(L, cfg)
    if inner.family != "E2_diagonal":
        raise ClassificationError(f"limit map is {inner.family}, expected the diagonal map")
    Y = dagger(inner.conjugator)

    def read(Y):
        E11 = np.array([[1, 0], [0, 0]], dtype=complex)
        img = conjugate_map(phi, Y)(E11)
        return float(np.real(img[0, 0])), float(np.real(img[1, 1]))

    lam, lam_p = read(Y)
    if lam + lam_p < 1:
        Y = Y @ _SWAP2
        lam, lam_p = read(Y)
    if lam - lam_p <= VERIFY_TOL:
        raise ClassificationError(f"lambda - lambda' = {lam - lam_p:.3g} is not positive for a rank-2 map")
    return lam, lam_p, dagger(Y)


def classify_unital_qpos_m2(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> CanonicalForm:
    """Class of a unital q-positive map on ``M_2``: rank 1, 2 or invertible."""
    if phi.n != 2:
        raise DimensionError("classify_unital_qpos_m2 needs a map on M_2")
    if not phi.is_unital(cfg.rank_tol):
        raise ClassificationError("map is not unital")
    r = _rank(phi, cfg)
    if r == 3:
        raise RankThreeError()
    verdict = certify_q_positive(phi, cfg)
    if verdict.refuted:
        raise ClassificationError(f"map is not q-positive (witness t = {verdict.witness_t})")
    if r == 1:
        return _classify_state(phi, "M2_rank1")
    if r == 2:
        lam, lam_p, X = canonical_rank2_params(phi, cfg)
        return _finish(phi, "M2_rank2", {"lambda": lam, "lambda_prime": lam_p}, X)
    if r == 4:
        gen = extract_generator_Y(phi, cfg)
        if gen.is_qpure_canonical():
            w, V = _eigh_increasing(-1j * gen.Y)
            V = V[:, ::-1]
            lams = [float(x) for x in w[::-1]]
            return _finish(phi, "M2_invertible", {"lambdas": lams}, dagger(V), gen)
        return _finish(phi, "M2_invertible", {"action": phi.action.copy()}, np.eye(2), gen)
    raise ClassificationError(f"unexpected rank {r}")


def is_qpure_m2(form: CanonicalForm, tol: float = 1e-9) -> bool:
    """q-purity of a classified unital q-positive map on ``M_2``."""
    if form.family == "M2_rank1":
        return min(form.params["weights"]) > tol
    if form.family == "M2_rank2":
        return False
    return "lambdas" in form.params


def canonical_rank2_pair(lam: float, lam_prime: float) -> tuple[float, float]:
    """Representative of ``{(lam, lam'), (1 - lam', 1 - lam)}`` with sum at least 1."""
    if lam + lam_prime < 1:
        return 1 - lam_prime, 1 - lam
    return lam, lam_prime


def random_unital_qpos_m2(seed, cls: str | None = None) -> Superoperator:
    """Seeded unital q-positive map on ``M_2`` from one of the three classes."""
    return random_unital_qpos_m2_with_params(seed, cls)[0]


def random_unital_qpos_m2_with_params(seed, cls: str | None = None):
    rng = np.random.default_rng(seed)
    if cls is None:
        cls = M2_FAMILIES[int(rng.integers(3))]
    if cls == "M2_rank1":
        w = np.sort(rng.dirichlet([1.0, 1.0]))
        params, phi = {"weights": list(w)}, state_map(weights=w)
    elif cls == "M2_rank2":
        lam_p, lam = np.sort(rng.uniform(0, 1, 2))
        if lam - lam_p < 0.05:
            lam, lam_p = min(1.0, lam + 0.05), max(0.0, lam_p - 0.05)
        lam, lam_p = canonical_rank2_pair(float(lam), float(lam_p))
        params, phi = {"lambda": lam, "lambda_prime": lam_p}, rank2_canonical(lam, lam_p)
    elif cls == "M2_invertible":
        a = float(rng.uniform(0.1, 2.0))
        params, phi = {"lambdas": [a, -a]}, qpure_invertible_canonical([a, -a])
    else:
        raise ValueError(f"unknown class {cls!r}")
    U = haar_unitary(2, rng)
    return conjugate_map(phi, U), cls, params, U


def random_idempotent_ucp(n: int, family: str, rng: np.random.Generator):
    """``(map, params, U)`` for a seeded conjugate of a canonical E_2 / E_3 form."""
    params: dict = {}
    if family in ("E2_state", "E3_state"):
        w = np.sort(rng.dirichlet(np.ones(n)))
        if family == "E3_state":
            w = np.sort(0.05 + 0.85 * w)
            w = w / w.sum()
        params["weights"] = [float(x) for x in w]
    elif family in ("E3_I", "E3_II", "E3_III"):
        params["lambda"] = float(rng.uniform(0.0, 0.5))
    elif family == "E3_VI":
        params["lambda"] = float(rng.uniform(0.02, 0.5))
    canonical = reconstruct(family, params)
    if canonical.n != n:
        raise DimensionError(f"{family} does not act on M_{n}")
    U = haar_unitary(n, rng)
    return conjugate_map(canonical, U), params, U
