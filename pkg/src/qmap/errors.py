"""Exception hierarchy."""


class QMapError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(QMapError, ValueError):
    pass


class NotUnitaryError(QMapError, ValueError):
    pass


class SingularResolventError(QMapError, ArithmeticError):
    """``I + t*phi`` is singular or too ill-conditioned to invert."""

    def __init__(self, t: float, cond: float):
        super().__init__(f"I + t*phi is ill-conditioned at t={t!r} (cond={cond:.3g})")
        self.t = t
        self.cond = cond


class LimitHypothesisError(QMapError, ArithmeticError):
    """The family t*phi(I + t*phi)^-1 has no limit as t -> infinity."""


class NotCompletelyPositiveError(QMapError, ValueError):
    pass


class ClassificationError(QMapError, ValueError):
    """The input does not fit any canonical form, or verification failed."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class RankThreeError(ClassificationError):
    """Unital q-positive maps and idempotent UCP maps on M_2 never have rank 3."""

    def __init__(self, message: str = "rank(phi) != 3 for unital q-positive maps on M_2; got rank 3"):
        super().__init__(message)


class SchemaError(QMapError, ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
