"""Numerical tolerances shared by every analysis."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class ToleranceConfig:
    """Tolerances and sampling parameters.

    ``eig_floor`` is relative: a Hermitian matrix ``C`` counts as positive
    semidefinite when its smallest eigenvalue is at least
    ``-eig_floor * (1 + ||C||)``. ``rank_tol`` is relative to the largest
    singular value and doubles as the eigenvalue clustering radius.
    ``t_cap`` is the largest resolvent parameter on the sampling grid.
    """

    eig_floor: float = 1e-9
    rank_tol: float = 1e-8
    grid_points: int = 64
    refine_depth: int = 4
    bisect_tol: float = 1e-10
    t_cap: float = 1e4
    cond_guard: float = 1e12

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be positive")
        if self.grid_points < 16:
            raise ValueError("grid_points must be at least 16")

    def with_overrides(self, **kwargs) -> "ToleranceConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT = ToleranceConfig()
