"""Exception and warning hierarchy for spectral-packets.

Every error carries an ``exit_code`` so the CLI can map failures to process
exit statuses without inspecting messages.
"""

from __future__ import annotations


class SpectralError(Exception):
    """Base class for all spectral-packets errors."""

    exit_code: int = 3


class DuplicatePoles(SpectralError, ValueError):
    """Two kernel poles coincide (within 1e-14)."""


class PoleInLowerHalfPlane(SpectralError, ValueError):
    """A kernel pole does not lie strictly in the upper half-plane."""


class KernelConstructionError(SpectralError, ValueError):
    """A kernel cannot be built or evaluates to a non-real value."""


class InvalidInterval(SpectralError, ValueError):
    """An interval or quadrature rule is malformed."""


class NonpositiveEpsilon(SpectralError, ValueError):
    """The smoothing parameter must be strictly positive."""


class NonpositiveValue(SpectralError, ValueError):
    """A log-log fit received a non-positive or non-finite value."""


class InsufficientData(SpectralError, ValueError):
    """Not enough data points to fit or sweep."""

    exit_code = 2


class SingularSystem(SpectralError):
    """A banded linear system could not be solved."""


class NumericalFailure(SpectralError):
    """A computation produced non-finite or inconsistent output."""


class EvaluationOnSpectrum(SpectralError, ValueError):
    """The resolvent was requested at a real point of the spectrum."""


class SingularPoint(SpectralError, ValueError):
    """A spectral density was evaluated at one of its singular points."""


class GridMismatch(SpectralError, ValueError):
    """Two grid functions do not share the same quadrature rule."""


class EmptyWindow(SpectralError, ValueError):
    """A comparison window contains no grid nodes."""


class NoReferenceAvailable(SpectralError):
    """The operator has no closed-form reference for the requested quantity."""

    exit_code = 4


class ConfigError(SpectralError):
    """Invalid run configuration.

    Attributes:
        field: Name of the offending configuration key, if known
        line: 1-based line number in the config file, if the value came from one
    """

    exit_code = 2

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class SpectralWarning(UserWarning):
    """Base class for numerical accuracy warnings."""


class TruncationWarning(SpectralWarning):
    """A Fourier or transverse-mode expansion is truncated above tolerance."""


class DomainTooSmallWarning(SpectralWarning):
    """The truncated domain is short compared to the resolvent damping length."""
