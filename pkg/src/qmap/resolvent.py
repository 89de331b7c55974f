"""Resolvent families ``phi (I + t phi)^{-1}`` and sampled q-positivity verdicts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import DEFAULT, ToleranceConfig
from .errors import LimitHypothesisError, NotCompletelyPositiveError, QMapError, SingularResolventError
from .forms import phi_r_family, phi_r_mask, phi_r_threshold  # noqa: F401  (re-exported)
from .superop import Superoperator, choi_matrix, min_eigenvalue

CERTIFIED = "certified_sampled"
REFUTED = "refuted"
INCONCLUSIVE = "inconclusive"

# imaginary parts below this (relative to the spectral radius) count as real
_REAL_AXIS_TOL = 1e-7
_BISECT_MAX_ITER = 200
_EXTENSION_DECADES = 6
# floor used to place the sign change itself; only guards against rounding noise
_CROSSING_FLOOR = 1e3 * np.finfo(float).eps


def spectrum(phi: Superoperator) -> np.ndarray:
    return np.linalg.eigvals(phi.action)


def negative_eigenvalues(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> np.ndarray:
    ev = spectrum(phi)
    scale = 1.0 + float(np.abs(ev).max(initial=0.0))
    mask = (np.abs(ev.imag) <= _REAL_AXIS_TOL * scale) & (ev.real < -cfg.eig_floor * scale)
    return ev[mask].real


def has_no_negative_eigenvalues(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> bool:
    return negative_eigenvalues(phi, cfg).size == 0


def resolvent_map(phi: Superoperator, t: float, cfg: ToleranceConfig = DEFAULT) -> Superoperator:
    """``phi o (I + t phi)^{-1}``."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0:
        return phi
    M = np.eye(phi.action.shape[0]) + t * phi.action
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > cfg.cond_guard:
        raise SingularResolventError(t, cond)
    # phi commutes with (I + t phi)^{-1}, so solving on either side is fine
    return Superoperator(np.linalg.solve(M, phi.action))


def cfg_floor(C, cfg: ToleranceConfig = DEFAULT) -> float:
    return cfg.eig_floor * (1.0 + np.linalg.norm(C, 2))


@dataclass(frozen=True)
class GridMeta:
    grid_points: int
    refine_depth: int
    t_cap: float
    evaluated: int
    guarded: tuple[float, ...] = ()
    bisect_iterations: int = 0
    extended_to: float | None = None


@dataclass(frozen=True)
class QPositivityVerdict:
    tag: str
    witness_t: float | None
    min_eig_trace: tuple[tuple[float, float], ...]
    eig_check: bool
    grid_meta: GridMeta
    reason: str = ""
    limit_min_eig: float | None = None
    bracket: tuple[float, float] | None = None

    @property
    def refuted(self) -> bool:
        return self.tag == REFUTED

    @property
    def threshold(self) -> float | None:
        """Midpoint of the bracket around the sign change of the minimum Choi eigenvalue."""
        return None if self.bracket is None else 0.5 * (self.bracket[0] + self.bracket[1])

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "witness_t": self.witness_t,
            "eig_check": self.eig_check,
            "reason": self.reason,
            "limit_min_eig": self.limit_min_eig,
            "bracket": list(self.bracket) if self.bracket else None,
            "threshold": self.threshold,
            "min_eig_trace": [list(p) for p in self.min_eig_trace],
            "grid_meta": {
                "grid_points": self.grid_meta.grid_points,
                "refine_depth": self.grid_meta.refine_depth,
                "t_cap": self.grid_meta.t_cap,
                "evaluated": self.grid_meta.evaluated,
                "guarded": list(self.grid_meta.guarded),
                "bisect_iterations": self.grid_meta.bisect_iterations,
                "extended_to": self.grid_meta.extended_to,
            },
        }


@dataclass
class _Scan:
    """Sampled minimum-eigenvalue margins of a one-parameter family of maps."""

    evaluate: Callable[[float], Superoperator]
    cfg: ToleranceConfig
    points: dict = field(default_factory=dict)  # s -> (t, min_eig, floor margin, crossing margin) or None if guarded

    def at_s(self, s: float):
        if s not in self.points:
            self.points[s] = self.at_t(s / (1.0 - s))
        return self.points[s]

    def at_t(self, t: float):
        try:
            phi = self.evaluate(t)
        except SingularResolventError:
            return None
        C = choi_matrix(phi)
        lam = min_eigenvalue(C)
        scale = 1.0 + np.linalg.norm(C, 2)
        return t, lam, lam + self.cfg.eig_floor * scale, lam + _CROSSING_FLOOR * scale

    def run_grid(self, s_values) -> None:
        for s in s_values:
            self.at_s(float(s))

    def refine(self, depth: int) -> None:
        """Insert midpoints around local minima of the margin, ``depth`` rounds."""
        for _ in range(depth):
            ss = sorted(s for s, v in self.points.items() if v is not None)
            m = [self.points[s][2] for s in ss]
            new = set()
            for i in range(len(ss)):
                left = m[i - 1] if i > 0 else math.inf
                right = m[i + 1] if i + 1 < len(ss) else math.inf
                if m[i] <= left and m[i] <= right:
                    if i > 0:
                        new.add(0.5 * (ss[i - 1] + ss[i]))
                    if i + 1 < len(ss):
                        new.add(0.5 * (ss[i] + ss[i + 1]))
            self.run_grid(sorted(new - set(self.points)))

    def first_failure(self):
        """``(t_pass, t_fail)`` around the first failing sample, or ``None``."""
        last_pass = None
        for s in sorted(self.points):
            v = self.points[s]
            if v is None:
                continue
            if v[2] < 0:
                return (last_pass, v[0])
            last_pass = v[0]
        return None

    def trace(self):
        return tuple((v[0], v[1]) for s, v in sorted(self.points.items()) if v is not None)

    def guarded(self):
        return tuple(s / (1 - s) for s, v in sorted(self.points.items()) if v is None)

    def bisect(self, t_pass: float, t_fail: float, which: int = 2) -> tuple[float, float, int]:
        """Shrink ``[t_pass, t_fail]`` on the sign of margin ``which`` (2: floor, 3: crossing)."""
        it = 0
        while t_fail - t_pass > self.cfg.bisect_tol and it < _BISECT_MAX_ITER:
            mid = 0.5 * (t_pass + t_fail)
            v = self.at_t(mid)
            it += 1
            if v is None:
                break
            if v[which] < 0:
                t_fail = mid
            else:
                t_pass = mid
        return t_pass, t_fail, it


def _grid(cfg: ToleranceConfig, t_cap: float | None = None) -> np.ndarray:
    t_cap = cfg.t_cap if t_cap is None else t_cap
    return np.linspace(0.0, t_cap / (1.0 + t_cap), cfg.grid_points)


def scan_cp_family(
    evaluate: Callable[[float], Superoperator],
    limit: Callable[[], Superoperator] | None,
    cfg: ToleranceConfig = DEFAULT,
    eig_check: bool = True,
) -> QPositivityVerdict:
    """Sample CP of ``evaluate(t)`` for ``t`` in ``[0, t_cap]`` and at ``t = inf``.

    ``evaluate`` should return a family normalized to stay bounded as ``t``
    grows, so the relative eigenvalue floor keeps its meaning.
    """
    scan = _Scan(evaluate, cfg)
    scan.run_grid(_grid(cfg))
    scan.refine(cfg.refine_depth)
    bracket = scan.first_failure()
    limit_min = None
    extended_to = None

    if bracket is None and limit is not None:
        try:
            L = limit()
        except LimitHypothesisError:
            L = None
        if L is not None:
            lam, margin = _margin_with(L, cfg)
            limit_min = lam
            if margin < 0:
                # the family fails at infinity, so it fails somewhere past t_cap
                t_lo = cfg.t_cap
                for _ in range(_EXTENSION_DECADES):
                    t_hi = 10.0 * t_lo
                    for t in np.geomspace(t_lo, t_hi, cfg.grid_points)[1:]:
                        v = scan.at_t(float(t))
                        if v is not None:
                            scan.points[float(t) / (1.0 + float(t))] = v
                    extended_to = t_hi
                    bracket = scan.first_failure()
                    if bracket is not None:
                        break
                    t_lo = t_hi
                if bracket is None:
                    meta = GridMeta(cfg.grid_points, cfg.refine_depth, cfg.t_cap, len(scan.points),
                                    scan.guarded(), 0, extended_to)
                    return QPositivityVerdict(REFUTED, math.inf, scan.trace(), eig_check, meta,
                                              "limit map is not completely positive", limit_min)
        else:
            meta = GridMeta(cfg.grid_points, cfg.refine_depth, cfg.t_cap, len(scan.points), scan.guarded())
            tag = INCONCLUSIVE if eig_check else REFUTED
            return QPositivityVerdict(tag, None, scan.trace(), eig_check, meta,
                                      "limit map unavailable; t = inf not checked")

    if bracket is not None:
        t_pass, t_fail = bracket
        iters = 0
        if t_pass is None:
            crossing = (t_fail, t_fail)
        else:
            # locate the sign change itself, then the first point below the floor
            lo, hi, n1 = scan.bisect(t_pass, t_fail, which=3)
            crossing = (lo, hi)
            _, t_fail, n2 = scan.bisect(lo, t_fail, which=2)
            iters = n1 + n2
        meta = GridMeta(cfg.grid_points, cfg.refine_depth, cfg.t_cap, len(scan.points),
                        scan.guarded(), iters, extended_to)
        reason = "not completely positive at t = 0" if t_pass is None else "resolvent leaves the CP cone"
        return QPositivityVerdict(REFUTED, t_fail, scan.trace(), eig_check, meta, reason, limit_min, crossing)

    meta = GridMeta(cfg.grid_points, cfg.refine_depth, cfg.t_cap, len(scan.points), scan.guarded())
    if not scan.trace():
        return QPositivityVerdict(INCONCLUSIVE, None, (), eig_check, meta, "every sample was guarded")
    if not eig_check:
        return QPositivityVerdict(REFUTED, None, scan.trace(), eig_check, meta, "negative eigenvalue", limit_min)
    return QPositivityVerdict(CERTIFIED, None, scan.trace(), eig_check, meta, "", limit_min)


def _margin_with(phi: Superoperator, cfg: ToleranceConfig) -> tuple[float, float]:
    C = choi_matrix(phi)
    lam = min_eigenvalue(C)
    return lam, lam + cfg_floor(C, cfg)


def scaled_resolvent(phi: Superoperator, t: float, cfg: ToleranceConfig = DEFAULT) -> Superoperator:
    """``(1 + t) phi (I + t phi)^{-1}``: same CP status, bounded in ``t``."""
    return (1.0 + t) * resolvent_map(phi, t, cfg)


def certify_q_positive(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> QPositivityVerdict:
    """Sampled q-positivity check.

    ``certified_sampled`` means no violation on the refined grid nor at
    ``t = inf``; it is not a proof. A negative eigenvalue refutes outright.
    """
    from .limits import limit_map

    eig_ok = has_no_negative_eigenvalues(phi, cfg)
    limit = (lambda: limit_map(phi, cfg).limit) if eig_ok else None
    return scan_cp_family(lambda t: scaled_resolvent(phi, t, cfg), limit, cfg, eig_ok)


def q_threshold(phi: Superoperator, cfg: ToleranceConfig = DEFAULT) -> float | None:
    """End of the initial interval of ``t`` on which the resolvent is CP."""
    if not has_no_negative_eigenvalues(phi, cfg):
        raise QMapError("map has a negative eigenvalue")
    lam, margin = _margin_with(phi, cfg)
    if margin < 0:
        raise NotCompletelyPositiveError(f"map is not CP at t = 0 (min Choi eigenvalue {lam:.3g})")
    verdict = scan_cp_family(lambda t: scaled_resolvent(phi, t, cfg), None, cfg)
    return verdict.threshold
