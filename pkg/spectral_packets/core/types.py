"""Core type definitions for spectral-packets reports."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field


class OperatorKind(str, Enum):
    """Gallery operators selectable from the CLI."""

    MULTIPLICATION = "multiplication"
    RANK_ONE = "rank_one"
    FREE_LAPLACIAN = "free_laplacian"
    SCHRODINGER = "schrodinger"
    STRIP = "strip"


class SweepMode(str, Enum):
    """Error norm used by a convergence sweep."""

    WEAK = "weak"
    SUP = "sup"


class CommandKind(str, Enum):
    """CLI subcommands."""

    KERNEL = "kernel"
    EIGENFUNCTION = "eigenfunction"
    MEASURE = "measure"
    CONVERGE = "converge"


class MomentReport(BaseModel):
    """Numerical check of the defining moment conditions of a rational kernel."""

    order: int
    tol: float
    normalization_error: float
    moment_errors: list[float] = Field(default_factory=list)
    decay_exponent_fit: float
    failures: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True if every moment condition holds within tolerance."""
        return not self.failures


class SweepPoint(BaseModel):
    """One (eps, error) sample of a convergence sweep."""

    eps: float
    error: float
    fitted: bool = True


class ErrorSweep(BaseModel):
    """Errors of one kernel order over a list of smoothing parameters."""

    order: int
    mode: SweepMode
    lam: float
    points: list[SweepPoint] = Field(default_factory=list)
    slope: float | None = None

    @property
    def errors(self) -> list[float]:
        """Errors in sweep order."""
        return [point.error for point in self.points]

    def fitted_pairs(self) -> list[tuple[float, float]]:
        """(eps, error) pairs that take part in the slope fit."""
        return [(p.eps, p.error) for p in self.points if p.fitted]
