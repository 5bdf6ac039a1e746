"""Exception types shared across the package."""

from __future__ import annotations


class SiplabError(Exception):
    """Base class for all siplab errors."""


class DimensionMismatch(SiplabError):
    def __init__(self, expected: int, actual: int, what: str = "vector"):
        super().__init__(f"dimension mismatch: {what} expected dim {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class ZeroVectorError(SiplabError):
    """Raised where a nonzero vector is required (e.g. supporting functionals)."""


class UnsupportedModelError(SiplabError):
    """Raised when an operation needs smoothness/strict convexity the model lacks."""


class LayoutError(SiplabError):
    """Malformed finitely-supported element (bad stream/block index or block dim)."""


class ConfigError(SiplabError):
    """Malformed norm-model or run configuration."""


class ConvergenceError(SiplabError):
    """Solver failed to reach the requested stationarity residual.

    Carries the last iterate and its residual so the failure is inspectable.
    """

    def __init__(self, message: str, last_iterate=None, residual: float | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class NoNonlinearComplementError(SiplabError):
    """Direction sweep exhausted its budget without a nonlinearity witness."""

    def __init__(self, best_residual: float, threshold: float, n_dirs: int):
        super().__init__(
            "no non-linear complement found above threshold "
            f"{threshold:g} (best residual {best_residual:.3e} over {n_dirs} directions); "
            "the space may be (isometrically) Euclidean or the budget too small"
        )
        self.best_residual = best_residual
        self.threshold = threshold
        self.n_dirs = n_dirs
