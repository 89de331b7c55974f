"""Linear maps between matrix spaces, stored in the matrix-unit basis.

Matrices are vectorized row-major, so ``vec(A)[i*cols + j] == A[i, j]`` and
column ``(i, j)`` of an action matrix is literally the image of ``e_ij``.
"""
from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from .config import DEFAULT, ToleranceConfig
from .errors import DimensionError, NotCompletelyPositiveError, NotUnitaryError


def vec(A) -> np.ndarray:
    return np.asarray(A, dtype=complex).reshape(-1)


def matrix_unit(i: int, j: int, rows: int, cols: int | None = None) -> np.ndarray:
    E = np.zeros((rows, rows if cols is None else cols), dtype=complex)
    E[i, j] = 1.0
    return E


def dagger(A) -> np.ndarray:
    return np.conj(np.asarray(A)).T


class RectangularMap:
    """Linear map from ``M_{in_shape}`` to ``M_{out_shape}``."""

    def __init__(self, action, in_shape: tuple[int, int], out_shape: tuple[int, int]):
        action = np.array(action, dtype=complex)
        in_shape = tuple(int(x) for x in in_shape)
        out_shape = tuple(int(x) for x in out_shape)
        if action.shape != (out_shape[0] * out_shape[1], in_shape[0] * in_shape[1]):
            raise DimensionError(
                f"action of shape {action.shape} does not map {in_shape} matrices to {out_shape}"
            )
        action.setflags(write=False)
        self.action = action
        self.in_shape = in_shape
        self.out_shape = out_shape

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], in_shape, out_shape=None):
        """Tabulate ``f`` on the matrix units of ``M_{in_shape}``."""
        out_shape = tuple(in_shape) if out_shape is None else tuple(out_shape)
        rows, cols = in_shape
        columns = []
        for i in range(rows):
            for j in range(cols):
                image = np.asarray(f(matrix_unit(i, j, rows, cols)), dtype=complex)
                if image.shape != out_shape:
                    raise DimensionError(f"f returned shape {image.shape}, expected {out_shape}")
                columns.append(image.reshape(-1))
        return cls(np.column_stack(columns), in_shape, out_shape)

    def _like(self, action, in_shape=None, out_shape=None):
        return RectangularMap(action, in_shape or self.in_shape, out_shape or self.out_shape)

    def __call__(self, A) -> np.ndarray:
        A = np.asarray(A, dtype=complex)
        if A.shape != self.in_shape:
            raise DimensionError(f"expected a {self.in_shape} matrix, got {A.shape}")
        return (self.action @ A.reshape(-1)).reshape(self.out_shape)

    def __matmul__(self, other: "RectangularMap"):
        """Composition: ``(self @ other)(A) == self(other(A))``."""
        if other.out_shape != self.in_shape:
            raise DimensionError("cannot compose maps with mismatched shapes")
        return self._like(self.action @ other.action, other.in_shape, self.out_shape)

    def _check_same(self, other):
        if (self.in_shape, self.out_shape) != (other.in_shape, other.out_shape):
            raise DimensionError("maps act between different spaces")

    def __add__(self, other):
        self._check_same(other)
        return self._like(self.action + other.action)

    def __sub__(self, other):
        self._check_same(other)
        return self._like(self.action - other.action)

    def __neg__(self):
        return self._like(-self.action)

    def __mul__(self, c):
        return self._like(c * self.action)

    __rmul__ = __mul__

    def norm(self) -> float:
        """Operator norm with respect to the Hilbert-Schmidt inner product."""
        if self.action.size == 0:
            return 0.0
        return float(np.linalg.norm(self.action, 2))

    def distance(self, other) -> float:
        return (self - other).norm()

    def rank(self, rank_tol: float = DEFAULT.rank_tol) -> int:
        s = np.linalg.svd(self.action, compute_uv=False)
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > rank_tol * s[0]))

    def __repr__(self):
        return f"{type(self).__name__}(in_shape={self.in_shape}, out_shape={self.out_shape})"


class Superoperator(RectangularMap):
    """Linear map on ``M_n(C)`` held as its ``n^2 x n^2`` action matrix."""

    def __init__(self, action):
        action = np.asarray(action, dtype=complex)
        if action.ndim != 2 or action.shape[0] != action.shape[1]:
            raise DimensionError(f"action must be square, got shape {action.shape}")
        n = int(round(np.sqrt(action.shape[0])))
        if n * n != action.shape[0]:
            raise DimensionError(f"action size {action.shape[0]} is not a perfect square")
        super().__init__(action, (n, n), (n, n))

    @property
    def n(self) -> int:
        return self.in_shape[0]

    @classmethod
    def from_function(cls, f, n, out_shape=None):
        if isinstance(n, tuple):
            n = n[0]
        return cls(RectangularMap.from_function(f, (n, n)).action)

    @classmethod
    def identity(cls, n: int) -> "Superoperator":
        return cls(np.eye(n * n))

    @classmethod
    def zero(cls, n: int) -> "Superoperator":
        return cls(np.zeros((n * n, n * n)))

    def _like(self, action, in_shape=None, out_shape=None):
        if (in_shape or self.in_shape) == (out_shape or self.out_shape) and \
                (in_shape or self.in_shape)[0] == (in_shape or self.in_shape)[1]:
            return Superoperator(action)
        return RectangularMap(action, in_shape or self.in_shape, out_shape or self.out_shape)

    def power(self, k: int) -> "Superoperator":
        return Superoperator(np.linalg.matrix_power(self.action, k))

    def inverse(self) -> "Superoperator":
        return Superoperator(np.linalg.inv(self.action))

    def unit_image(self) -> np.ndarray:
        return self(np.eye(self.n))

    def is_unital(self, tol: float = 1e-9) -> bool:
        return bool(np.linalg.norm(self.unit_image() - np.eye(self.n)) <= tol)


def as_superoperator(phi) -> Superoperator:
    if isinstance(phi, Superoperator):
        return phi
    return Superoperator(phi)


def _kron_conj(X) -> np.ndarray:
    """Action matrix of ``A -> X A X*`` in the row-major basis."""
    X = np.asarray(X, dtype=complex)
    return np.kron(X, X.conj())


def superop_from_kraus(n: int, kraus: Sequence) -> Superoperator:
    """``A -> sum_i S_i A S_i^*``."""
    action = np.zeros((n * n, n * n), dtype=complex)
    for idx, S in enumerate(kraus):
        S = np.asarray(S, dtype=complex)
        if S.shape != (n, n):
            raise DimensionError(f"Kraus operator {idx} has shape {S.shape}, expected {(n, n)}")
        action += _kron_conj(S)
    return Superoperator(action)


def apply(phi: RectangularMap, A) -> np.ndarray:
    return phi(A)


def choi_matrix(phi: Superoperator) -> np.ndarray:
    """Block matrix whose ``(i, j)`` block is ``phi(e_ij)``."""
    n = phi.n
    # action[(a,b),(i,j)] = phi(e_ij)[a,b]  ->  choi[(i,a),(j,b)]
    return phi.action.reshape(n, n, n, n).transpose(2, 0, 3, 1).reshape(n * n, n * n)


def from_choi(C) -> Superoperator:
    C = np.asarray(C, dtype=complex)
    n = int(round(np.sqrt(C.shape[0])))
    return Superoperator(C.reshape(n, n, n, n).transpose(1, 3, 0, 2).reshape(n * n, n * n))


def psd_floor(M, cfg: ToleranceConfig = DEFAULT) -> float:
    """The (negative) eigenvalue below which ``M`` is declared not PSD."""
    return -cfg.eig_floor * (1.0 + np.linalg.norm(M, 2))


def hermitian_defect(M) -> float:
    M = np.asarray(M)
    scale = np.linalg.norm(M)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(M - dagger(M)) / scale)


def min_eigenvalue(M) -> float:
    M = np.asarray(M, dtype=complex)
    return float(np.linalg.eigvalsh((M + dagger(M)) / 2)[0])


def is_psd(M, cfg: ToleranceConfig = DEFAULT) -> bool:
    M = np.asarray(M, dtype=complex)
    if hermitian_defect(M) > cfg.rank_tol:
        return False
    return min_eigenvalue(M) >= psd_floor(M, cfg)


class CPCheck(NamedTuple):
    ok: bool
    min_eig: float
    note: str = ""


def is_completely_positive(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> CPCheck:
    """Choi test with a relative eigenvalue floor."""
    C = choi_matrix(phi)
    if not np.any(C):
        return CPCheck(True, 0.0)
    lam = min_eigenvalue(C)
    if hermitian_defect(C) > cfg.rank_tol:
        return CPCheck(False, lam, "not hermiticity-preserving")
    return CPCheck(lam >= psd_floor(C, cfg), lam)


def kraus_decomposition(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> list[np.ndarray]:
    """Kraus operators from the eigenvectors of the Choi matrix.

    Eigenvalues under the relative floor are dropped, so the operators are
    linearly independent and there are at most ``n^2`` of them.
    """
    check = is_completely_positive(phi, cfg)
    if not check.ok:
        raise NotCompletelyPositiveError(
            f"map is not completely positive (min Choi eigenvalue {check.min_eig:.3g}"
            + (f", {check.note}" if check.note else "") + ")"
        )
    n = phi.n
    C = choi_matrix(phi)
    w, V = np.linalg.eigh((C + dagger(C)) / 2)
    cutoff = cfg.eig_floor * (1.0 + np.linalg.norm(C, 2))
    return [np.sqrt(w[k]) * V[:, k].reshape(n, n).T for k in range(len(w) - 1, -1, -1) if w[k] > cutoff]


def schur_map(M) -> Superoperator:
    """``A -> M . A`` (entrywise product)."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError("Schur mask must be square")
    return Superoperator(np.diag(M.reshape(-1)))


def is_schur_map(phi: RectangularMap, cfg: ToleranceConfig = DEFAULT) -> np.ndarray | None:
    """Return the mask if every ``phi(e_ij)`` is a multiple of ``e_ij``."""
    if phi.in_shape != phi.out_shape:
        return None
    d = np.diag(phi.action)
    off = phi.action - np.diag(d)
    scale = max(1.0, float(np.abs(phi.action).max(initial=0.0)))
    if np.abs(off).max(initial=0.0) > cfg.rank_tol * scale:
        return None
    return d.reshape(phi.in_shape).copy()


def rectangular_schur_map(M) -> RectangularMap:
    M = np.asarray(M, dtype=complex)
    return RectangularMap(np.diag(M.reshape(-1)), M.shape, M.shape)


def is_unitary(U, tol: float = 1e-9) -> bool:
    U = np.asarray(U)
    return U.ndim == 2 and U.shape[0] == U.shape[1] and \
        np.linalg.norm(dagger(U) @ U - np.eye(U.shape[0])) <= tol


def conjugate_map(phi: Superoperator, U, tol: float = 1e-9) -> Superoperator:
    """``phi_U(A) = U^* phi(U A U^*) U``."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (phi.n, phi.n):
        raise DimensionError(f"unitary must be {phi.n}x{phi.n}")
    if not is_unitary(U, tol):
        raise NotUnitaryError("conjugating matrix is not unitary")
    return Superoperator(_kron_conj(dagger(U)) @ phi.action @ _kron_conj(U))


def adjoint_corner(gamma: RectangularMap) -> RectangularMap:
    """``gamma^*(C) = (gamma(C^*))^*`` on the transposed shapes."""
    in_shape = gamma.in_shape[::-1]
    out_shape = gamma.out_shape[::-1]
    return RectangularMap.from_function(lambda C: dagger(gamma(dagger(C))), in_shape, out_shape)


def assemble_block_map(phi: Superoperator, gamma: RectangularMap, psi: Superoperator) -> Superoperator:
    """Block map acting as phi, gamma, gamma^* and psi on the four blocks."""
    n, k = phi.n, psi.n
    if gamma.in_shape != (n, k) or gamma.out_shape != (n, k):
        raise DimensionError(f"corner must map {n}x{k} matrices to {n}x{k} matrices")
    gamma_star = adjoint_corner(gamma)

    def upsilon(X):
        out = np.empty_like(X)
        out[:n, :n] = phi(X[:n, :n])
        out[:n, n:] = gamma(X[:n, n:])
        out[n:, :n] = gamma_star(X[n:, :n])
        out[n:, n:] = psi(X[n:, n:])
        return out

    return Superoperator.from_function(upsilon, n + k)


def split_block_map(upsilon: Superoperator, n: int):
    """Recover ``(phi, gamma, psi)`` by compressing to the corresponding blocks."""
    N = upsilon.n
    if not 0 < n < N:
        raise DimensionError(f"split must lie strictly between 0 and {N}, got {n}")
    k = N - n

    def block(rows, cols):
        def f(B):
            X = np.zeros((N, N), dtype=complex)
            X[rows, cols] = B
            return upsilon(X)[rows, cols]
        return f

    top, bottom = slice(0, n), slice(n, N)
    phi = Superoperator.from_function(block(top, top), n)
    gamma = RectangularMap.from_function(block(top, bottom), (n, k))
    psi = Superoperator.from_function(block(bottom, bottom), k)
    return phi, gamma, psi


def compress(phi: Superoperator, P) -> Superoperator:
    """``A -> P phi(A) P``."""
    P = np.asarray(P, dtype=complex)
    return Superoperator(_kron_conj(P) @ phi.action)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))
