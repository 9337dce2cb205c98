"""Exception types shared by every module."""

from __future__ import annotations

from typing import Any


class RenyiError(Exception):
    """Base class; ``code`` is the stable machine-readable name."""

    code = "RenyiError"

    def to_dict(self) -> dict[str, Any]:
        return {"error": self.code, "message": str(self)}


class _Named(RenyiError):
    def __init_subclass__(cls, **kwargs: Any) -> None:
        super().__init_subclass__(**kwargs)
        cls.code = cls.__name__


class AlphabetMismatch(_Named):
    pass


class ZeroMeasure(_Named):
    pass


class SupportMismatch(_Named):
    pass


class OrderOutOfRange(_Named):
    pass


class RhoOutOfRange(_Named):
    pass


class DomainError(_Named):
    pass


class InvalidPartition(_Named):
    pass


class InvalidChannel(_Named):
    pass


class AlphabetTooLarge(_Named):
    pass


class InfeasibleConstraint(_Named):
    pass


class EmptyCore(_Named):
    pass


class QuadratureFailure(_Named):
    pass


class UnboundedIntensity(_Named):
    pass


class VarianceBlowup(_Named):
    pass


class BudgetExceeded(_Named):
    pass


class UnknownSuite(_Named):
    pass


class NotConverged(_Named):
    """Raised when the certificate gap stays above tolerance.

    ``solution`` holds the best bracket found.
    """

    def __init__(self, message: str, solution: Any = None) -> None:
        super().__init__(message)
        self.solution = solution

    def to_dict(self) -> dict[str, Any]:
        out = super().to_dict()
        if self.solution is not None:
            out["lower"] = self.solution.lower_bound
            out["upper"] = self.solution.upper_bound
        return out
