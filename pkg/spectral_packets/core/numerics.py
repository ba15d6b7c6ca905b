"""Low-level numerical routines shared by the kernel, operator and measure modules.

Provides quadrature rules (single and composite Gauss-Legendre, graded and
uniform grids), the Lagrange-at-zero Vandermonde solve used for kernel
residues, real root finding for the cubic symbol x^3 - x, banded complex
linear solves, and log-log slope regression.

All functions are pure and all value types are immutable, so everything here
can be called concurrently.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike
from scipy import linalg as sla
from scipy.optimize import brentq

from spectral_packets.core.errors import (
    DuplicatePoles,
    GridMismatch,
    InsufficientData,
    InvalidInterval,
    KernelConstructionError,
    NonpositiveValue,
    SingularSystem,
)

logger = logging.getLogger(__name__)

# Extreme values of p(x) = x^3 - x, attained at x = -/+ 1/sqrt(3)
SPECTRAL_EDGE = 2.0 * math.sqrt(3.0) / 9.0
CRITICAL_POINT = 1.0 / math.sqrt(3.0)

DOUBLE_ROOT_TOL = 1e-13
BOUNDARY_TOL = 1e-12
POLE_COINCIDENCE_TOL = 1e-14
DEFAULT_PANEL_ORDER = 16


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights approximating integrals over ``interval``."""

    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        a, b = (float(v) for v in self.interval)
        if not a < b:
            raise InvalidInterval(f"quadrature interval ({a}, {b}) is empty")
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise InvalidInterval("nodes and weights must be non-empty 1-D arrays of equal length")
        if np.any(nodes <= a) or np.any(nodes >= b):
            raise InvalidInterval("quadrature nodes must lie strictly inside the interval")
        if np.any(weights <= 0.0):
            raise InvalidInterval("quadrature weights must be positive")
        if abs(weights.sum() - (b - a)) > 1e-12 * (b - a):
            raise InvalidInterval(
                f"weights sum to {weights.sum():.17g}, expected interval length {b - a:.17g}"
            )
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "interval", (a, b))

    def __len__(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values: ArrayLike) -> complex | float | np.ndarray:
        """Apply the rule along the last axis of ``values``."""
        return np.asarray(values) @ self.weights

    def same_as(self, other: QuadratureRule) -> bool:
        """True if both rules have identical nodes and weights."""
        if self is other:
            return True
        return (
            self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )


@lru_cache(maxsize=32)
def _reference_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float, b: float) -> QuadratureRule:
    """
    Gauss-Legendre rule with ``n`` nodes on (a, b).

    The rule integrates polynomials of degree at most 2n - 1 exactly.

    Args:
        n: Number of nodes (>= 1)
        a: Left endpoint
        b: Right endpoint

    Returns:
        QuadratureRule on (a, b)

    Raises:
        InvalidInterval: If a >= b or n < 1
    """
    if n < 1:
        raise InvalidInterval(f"number of nodes must be positive, got {n}")
    if not a < b:
        raise InvalidInterval(f"interval ({a}, {b}) is empty")
    x, w = _reference_rule(int(n))
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return QuadratureRule(mid + half * x, half * w, (a, b))


def composite_gauss_legendre(
    breakpoints: ArrayLike,
    order: int = DEFAULT_PANEL_ORDER,
) -> QuadratureRule:
    """Composite rule with one ``order``-point Gauss-Legendre panel per breakpoint interval."""
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or bp.size < 2:
        raise InvalidInterval("at least two breakpoints are required")
    widths = np.diff(bp)
    if np.any(widths <= 0.0):
        raise InvalidInterval("breakpoints must be strictly increasing")
    x, w = _reference_rule(int(order))
    half = 0.5 * widths
    mid = 0.5 * (bp[:-1] + bp[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return QuadratureRule(nodes, weights, (float(bp[0]), float(bp[-1])))


def graded_breakpoints(
    a: float,
    b: float,
    focus: Iterable[float] = (),
    *,
    min_width: float,
    max_width: float,
    ratio: float = 1.5,
) -> np.ndarray:
    """
    Panel breakpoints on [a, b], uniform at ``max_width`` and graded toward focus points.

    Around each focus point c the breakpoints c +/- min_width * ratio**k are added
    until the offsets exceed ``max_width``.

    Args:
        a: Left endpoint
        b: Right endpoint
        focus: Points that need fine resolution (ignored outside [a, b])
        min_width: Width of the panels adjacent to a focus point
        max_width: Largest panel width
        ratio: Geometric growth factor (> 1)

    Returns:
        Strictly increasing breakpoints starting at a and ending at b
    """
    if not a < b:
        raise InvalidInterval(f"interval ({a}, {b}) is empty")
    if min_width <= 0.0 or max_width <= 0.0 or ratio <= 1.0:
        raise InvalidInterval("panel widths must be positive and the grading ratio > 1")

    n_base = max(1, math.ceil((b - a) / max_width))
    pieces = [np.linspace(a, b, n_base + 1)]
    if min_width < max_width:
        levels = math.ceil(math.log(max_width / min_width) / math.log(ratio))
        offsets = min_width * ratio ** np.arange(levels + 1)
        for c in focus:
            if a <= c <= b:
                pieces.extend((c - offsets, c + offsets, np.array([c])))

    bp = np.unique(np.clip(np.concatenate(pieces), a, b))
    tol = 1e-3 * min(min_width, max_width)
    merged = [float(bp[0])]
    for x in bp[1:]:
        if x - merged[-1] > tol:
            merged.append(float(x))
    merged[-1] = float(b)
    if len(merged) < 2:
        merged = [float(a), float(b)]
    return np.asarray(merged)


def graded_rule(
    a: float,
    b: float,
    focus: Iterable[float] = (),
    *,
    min_width: float,
    max_width: float,
    order: int = DEFAULT_PANEL_ORDER,
    ratio: float = 1.5,
) -> QuadratureRule:
    """Composite Gauss-Legendre rule on graded breakpoints (see ``graded_breakpoints``)."""
    bp = graded_breakpoints(a, b, focus, min_width=min_width, max_width=max_width, ratio=ratio)
    return composite_gauss_legendre(bp, order)


def uniform_rule(a: float, b: float, n: int) -> QuadratureRule:
    """Midpoint rule: ``n`` equal cells on (a, b), nodes at the cell centres."""
    if n < 1:
        raise InvalidInterval(f"number of nodes must be positive, got {n}")
    if not a < b:
        raise InvalidInterval(f"interval ({a}, {b}) is empty")
    h = (b - a) / n
    nodes = a + (np.arange(n) + 0.5) * h
    return QuadratureRule(nodes, np.full(n, h), (a, b))


def solve_vandermonde(poles: Sequence[complex] | np.ndarray) -> np.ndarray:
    """
    Residues for the moment system sum_j a_j**p alpha_j = delta_{p,0}, p < m.

    The solution is the Lagrange basis at the poles evaluated at zero,
    alpha_j = prod_{k != j} a_k / (a_k - a_j), which avoids forming the
    ill-conditioned Vandermonde matrix.

    Args:
        poles: m distinct complex numbers

    Returns:
        Array of m complex residues

    Raises:
        DuplicatePoles: If two poles coincide within 1e-14
        KernelConstructionError: If no poles are given
    """
    a = np.asarray(poles, dtype=complex).ravel()
    m = a.size
    if m == 0:
        raise KernelConstructionError("at least one pole is required")

    diff = a[None, :] - a[:, None]  # diff[j, k] = a_k - a_j
    off_diagonal = ~np.eye(m, dtype=bool)
    close = np.abs(diff) < POLE_COINCIDENCE_TOL
    if np.any(close & off_diagonal):
        j, k = np.argwhere(close & off_diagonal)[0]
        raise DuplicatePoles(f"poles {a[j]} and {a[k]} coincide")

    np.fill_diagonal(diff, 1.0)
    factors = a[None, :] / diff
    np.fill_diagonal(factors, 1.0)
    return factors.prod(axis=1)


def vandermonde_residuals(poles: ArrayLike, residues: ArrayLike) -> np.ndarray:
    """Absolute residuals |sum_j a_j**p alpha_j - delta_{p,0}| for p = 0..m-1."""
    a = np.asarray(poles, dtype=complex).ravel()
    alpha = np.asarray(residues, dtype=complex).ravel()
    powers = a[None, :] ** np.arange(a.size)[:, None]
    target = np.zeros(a.size)
    target[0] = 1.0
    return np.abs(powers @ alpha - target)


def cubic_symbol(x: ArrayLike) -> np.ndarray:
    """p(x) = x^3 - x."""
    x = np.asarray(x)
    return x * x * x - x


def cubic_symbol_derivative(x: ArrayLike) -> np.ndarray:
    """p'(x) = 3x^2 - 1."""
    x = np.asarray(x)
    return 3.0 * x * x - 1.0


@dataclass(frozen=True)
class CubicRoot:
    """Real root of x^3 - x - lambda; multiplicity 2 marks a critical point."""

    value: float
    multiplicity: int = 1

    @property
    def is_double(self) -> bool:
        return self.multiplicity > 1


def _newton_polish(x: float, lam: float, lo: float, hi: float, steps: int = 3) -> float:
    gx = x * x * x - x - lam
    for _ in range(steps):
        slope = 3.0 * x * x - 1.0
        if slope == 0.0 or gx == 0.0:
            break
        candidate = x - gx / slope
        g_candidate = candidate * candidate * candidate - candidate - lam
        if not lo <= candidate <= hi or abs(g_candidate) >= abs(gx):
            break
        x, gx = candidate, g_candidate
    return x


def cubic_roots_in_interval(
    lam: float,
    interval: tuple[float, float] = (-1.0, 1.0),
) -> list[CubicRoot]:
    """
    Real roots of x^3 - x - lambda strictly inside ``interval``, sorted ascending.

    The real line is split at the critical points +/- 1/sqrt(3) into three
    monotone pieces; each sign-changing piece is solved by Brent's method and
    polished with Newton steps. A critical point with |p(c) - lambda| < 1e-13 is
    reported once as a double root. Roots within 1e-12 of an interval endpoint
    are treated as boundary points and dropped.

    Args:
        lam: Spectral parameter
        interval: Open interval to search, may be infinite

    Returns:
        List of CubicRoot (possibly empty)
    """
    a, b = (float(v) for v in interval)
    if not a < b:
        raise InvalidInterval(f"interval ({a}, {b}) is empty")
    lam = float(lam)

    def g(x: float) -> float:
        return x * x * x - x - lam

    bound = 1.0 + max(1.0, abs(lam))
    critical = (-CRITICAL_POINT, CRITICAL_POINT)
    double = [c for c in critical if abs(g(c)) < DOUBLE_ROOT_TOL]
    found = [CubicRoot(c, 2) for c in double]

    edges = (-bound, critical[0], critical[1], bound)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo in double or hi in double:
            continue
        if g(lo) * g(hi) >= 0.0:
            continue
        x = brentq(g, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)
        found.append(CubicRoot(_newton_polish(float(x), lam, lo, hi), 1))

    inside = [r for r in found if a + BOUNDARY_TOL < r.value < b - BOUNDARY_TOL]
    return sorted(inside, key=lambda r: r.value)


@dataclass(frozen=True, eq=False)
class BandedComplexSystem:
    """
    Square banded matrix in LAPACK ``ab`` storage.

    ``bands[upper + i - j, j] == A[i, j]`` for entries inside the band.
    """

    lower: int
    upper: int
    bands: np.ndarray

    def __post_init__(self) -> None:
        bands = np.array(self.bands, dtype=complex)
        if self.lower < 0 or self.upper < 0:
            raise GridMismatch("band widths must be nonnegative")
        if bands.ndim != 2 or bands.shape[0] != self.lower + self.upper + 1:
            raise GridMismatch(
                f"band storage of shape {bands.shape} does not match "
                f"lower={self.lower}, upper={self.upper}"
            )
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)

    @property
    def size(self) -> int:
        return int(self.bands.shape[1])

    @property
    def bandwidth(self) -> int:
        return max(self.lower, self.upper)

    @classmethod
    def from_diagonals(
        cls,
        diagonals: Mapping[int, ArrayLike],
        size: int | None = None,
    ) -> BandedComplexSystem:
        """
        Build a system from diagonals keyed by offset (0 main, +1 super, -1 sub).

        Scalars are broadcast along their diagonal; ``size`` is inferred from the
        first array-valued diagonal when omitted.
        """
        if not diagonals:
            raise GridMismatch("at least one diagonal is required")
        if size is None:
            for offset, values in diagonals.items():
                arr = np.asarray(values)
                if arr.ndim == 1:
                    size = arr.size + abs(offset)
                    break
            else:
                raise GridMismatch("size is required when all diagonals are scalars")

        lower = max(0, -min(diagonals))
        upper = max(0, max(diagonals))
        bands = np.zeros((lower + upper + 1, size), dtype=complex)
        for offset, values in diagonals.items():
            length = size - abs(offset)
            if length <= 0:
                raise GridMismatch(f"offset {offset} does not fit a system of size {size}")
            try:
                diag = np.broadcast_to(np.asarray(values, dtype=complex), (length,))
            except ValueError as exc:
                raise GridMismatch(f"diagonal {offset} must have length {length}") from exc
            row = upper - offset
            if offset >= 0:
                bands[row, offset:] = diag
            else:
                bands[row, : size + offset] = diag
        return cls(lower=lower, upper=upper, bands=bands)

    def diagonal(self, offset: int) -> np.ndarray:
        """Entries of the diagonal with the given offset."""
        if not -self.lower <= offset <= self.upper:
            return np.zeros(max(self.size - abs(offset), 0), dtype=complex)
        row = self.upper - offset
        if offset >= 0:
            return self.bands[row, offset:]
        return self.bands[row, : self.size + offset]

    def to_dense(self) -> np.ndarray:
        """Dense copy of the matrix."""
        dense = np.zeros((self.size, self.size), dtype=complex)
        for offset in range(-self.lower, self.upper + 1):
            dense += np.diag(self.diagonal(offset), offset)
        return dense

    def matvec(self, x: ArrayLike) -> np.ndarray:
        """Matrix-vector product."""
        x = np.asarray(x)
        n = self.size
        if x.shape[0] != n:
            raise GridMismatch(f"vector of length {x.shape[0]} for a system of size {n}")
        y = np.zeros(x.shape, dtype=np.result_type(x, complex))
        for offset in range(-self.lower, self.upper + 1):
            diag = self.diagonal(offset)
            if offset >= 0:
                y[: n - offset] += diag * x[offset:]
            else:
                y[-offset:] += diag * x[: n + offset]
        return y


def solve_banded(system: BandedComplexSystem, rhs: ArrayLike) -> np.ndarray:
    """
    Solve ``system @ x = rhs``.

    Uses LAPACK's banded LU with partial pivoting, which keeps the fill-in
    inside the band storage.

    Args:
        system: Banded matrix
        rhs: Right-hand side of length ``system.size`` (or a matrix of columns)

    Returns:
        Complex solution vector

    Raises:
        SingularSystem: If the factorization breaks down or produces non-finite values
    """
    b = np.asarray(rhs)
    if b.shape[0] != system.size:
        raise GridMismatch(f"right-hand side of length {b.shape[0]} for a system of size {system.size}")
    try:
        x = sla.solve_banded((system.lower, system.upper), system.bands, b, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"banded system is singular: {exc}") from exc
    except ValueError as exc:
        raise SingularSystem(f"banded system could not be solved: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystem("banded solve produced non-finite values")
    return x


def fit_loglog_slope(points: Iterable[tuple[float, float]]) -> float:
    """
    Least-squares slope of log(error) against log(eps).

    Args:
        points: (eps, error) pairs, all strictly positive

    Returns:
        Fitted slope

    Raises:
        InsufficientData: Fewer than 3 points, or all eps equal
        NonpositiveValue: Any value non-positive or non-finite
    """
    pairs = [(float(eps), float(err)) for eps, err in points]
    if len(pairs) < 3:
        raise InsufficientData(f"slope fit needs at least 3 points, got {len(pairs)}")
    data = np.asarray(pairs)
    if not np.all(np.isfinite(data)) or np.any(data <= 0.0):
        raise NonpositiveValue("slope fit requires positive, finite eps and error values")
    log_eps = np.log(data[:, 0])
    if np.ptp(log_eps) == 0.0:
        raise InsufficientData("slope fit needs at least two distinct eps values")
    slope, _ = np.polyfit(log_eps, np.log(data[:, 1]), 1)
    return float(slope)
