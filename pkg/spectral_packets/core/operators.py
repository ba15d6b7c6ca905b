"""Gallery of self-adjoint operators exposed through their resolvents.

Each operator is a ``ResolventOracle``: the only access the wave-packet code
has to an operator A is ``apply(z, f) = (A - z)^-1 f`` for z off the
spectrum, plus spectrum metadata. Oracles are immutable after construction
and ``apply`` is pure, so one oracle can serve concurrent solves.
"""

from __future__ import annotations

import logging
import math
import warnings
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable, Sequence
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from spectral_packets.core.errors import (
    DomainTooSmallWarning,
    EvaluationOnSpectrum,
    GridMismatch,
    InvalidInterval,
    NoReferenceAvailable,
    NumericalFailure,
    SingularSystem,
    TruncationWarning,
)
from spectral_packets.core.functions import (
    FOURIER_CHUNK,
    GridFunction,
    ReferenceEigenfunction,
    StripGridFunction,
    transverse_mode,
)
from spectral_packets.core.numerics import (
    DEFAULT_PANEL_ORDER,
    SPECTRAL_EDGE,
    BandedComplexSystem,
    QuadratureRule,
    composite_gauss_legendre,
    cubic_roots_in_interval,
    cubic_symbol,
    gauss_legendre,
    graded_breakpoints,
    graded_rule,
    solve_banded,
    uniform_rule,
)
from spectral_packets.core.types import OperatorKind

logger = logging.getLogger(__name__)

Vector = GridFunction | StripGridFunction

TRUNCATION_TOL = 1e-12
MODE_CHOP_TOL = 1e-14
CUBIC_MAX_PANEL = 0.05
DEFAULT_RESOLUTION = 1e-4


class ResolventOracle(ABC):
    """
    Abstract resolvent z -> (A - z)^-1 of a self-adjoint operator A.

    Subclasses implement ``sample``, ``_solve`` and ``multiplicity``; the
    spectrum and grid checks live here.
    """

    kind: OperatorKind
    spectrum_interval: tuple[float, float]
    multiplicity_breakpoints: tuple[float, ...]
    is_real: bool = True

    @property
    def name(self) -> str:
        return self.kind.value

    @abstractmethod
    def sample(self, func: Callable[..., Any] | ArrayLike) -> Vector:
        """Build the operator's vector type from a function or an array of samples."""

    @abstractmethod
    def _check_vector(self, f: Vector) -> None:
        """Raise GridMismatch unless ``f`` lives on this operator's grid."""

    @abstractmethod
    def _solve(self, z: complex, f: Vector) -> Vector:
        """Apply the resolvent to an already validated vector."""

    @abstractmethod
    def multiplicity(self, lam: float) -> int:
        """Spectral multiplicity at ``lam`` (number of independent eigenfunctions)."""

    def _check_shift(self, z: complex) -> complex:
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise NumericalFailure(f"spectral shift must be finite, got {z}")
        lo, hi = self.spectrum_interval
        if z.imag == 0.0 and lo <= z.real <= hi:
            raise EvaluationOnSpectrum(
                f"resolvent of {self.name} requested at z = {z.real:g} inside the spectrum"
            )
        return z

    def apply(self, z: complex, f: Vector) -> Vector:
        """
        Apply (A - z)^-1 to ``f``.

        Args:
            z: Spectral shift, off the spectrum
            f: Vector on this operator's grid

        Returns:
            R(z) f on the same grid

        Raises:
            EvaluationOnSpectrum: If z is real and inside the spectrum
            GridMismatch: If f lives on a different grid
        """
        z = self._check_shift(z)
        self._check_vector(f)
        return self._solve(z, f)

    def pairing(self, z: complex, f: Vector, g: Vector) -> complex:
        """<R(z) f, g>."""
        return self.apply(z, f).inner(g)  # type: ignore[arg-type]

    def reference_eigenfunction(self, lam: float, f: Vector) -> ReferenceEigenfunction:
        """Closed-form packet limit; only operators with a known formula override this."""
        raise NoReferenceAvailable(f"no closed-form eigenfunction for the {self.name} operator")


class _LineOracle(ResolventOracle):
    """Operator on a line domain discretized by a single quadrature rule."""

    rule: QuadratureRule

    def sample(self, func: Callable[..., Any] | ArrayLike) -> GridFunction:
        if callable(func):
            values = func(self.rule.nodes)
            transform = getattr(func, "transform", None)
        else:
            values, transform = func, None
        return GridFunction(self.rule, np.asarray(values), transform)

    def _check_vector(self, f: Vector) -> None:
        if not isinstance(f, GridFunction) or not self.rule.same_as(f.rule):
            raise GridMismatch(f"vector does not live on the {self.name} grid")


class _CubicOracle(_LineOracle):
    """Shared setup of the operators built on p(x) = x^3 - x over (-1, 1)."""

    spectrum_interval = (-SPECTRAL_EDGE, SPECTRAL_EDGE)
    multiplicity_breakpoints = (-SPECTRAL_EDGE, 0.0, SPECTRAL_EDGE)

    def __init__(self, rule: QuadratureRule):
        self.rule = rule
        self.symbol = cubic_symbol(rule.nodes)
        self.symbol.setflags(write=False)

    def multiplicity(self, lam: float) -> int:
        return len(cubic_roots_in_interval(lam))


def cubic_rule(
    n: int = 2000,
    *,
    focus: Iterable[float] = (),
    resolution: float | None = None,
) -> QuadratureRule:
    """
    Grid for the cubic operators on (-1, 1).

    Plain n-point Gauss-Legendre, or, given spectral points in ``focus``, a
    composite rule graded toward every root of p(x) = lambda down to panel
    width ``resolution``.
    """
    focus = [float(lam) for lam in focus]
    if not focus:
        return gauss_legendre(n, -1.0, 1.0)
    width = DEFAULT_RESOLUTION if resolution is None else float(resolution)
    if not width > 0.0:
        raise InvalidInterval(f"grid resolution must be positive, got {width}")
    points = sorted({root.value for lam in focus for root in cubic_roots_in_interval(lam)})
    return graded_rule(
        -1.0,
        1.0,
        points,
        min_width=min(width, CUBIC_MAX_PANEL),
        max_width=CUBIC_MAX_PANEL,
        order=DEFAULT_PANEL_ORDER,
    )


class MultiplicationOperator(_CubicOracle):
    """Multiplication by p(x) = x^3 - x on L^2(-1, 1)."""

    kind = OperatorKind.MULTIPLICATION

    def _solve(self, z: complex, f: Vector) -> GridFunction:
        assert isinstance(f, GridFunction)
        return f.with_values(f.values / (self.symbol - z))


class RankOneOperator(_CubicOracle):
    """
    p(x) plus the rank-one integral operator g <., g> with g(x) = exp(-x^2).

    The discrete operator is diag(p) + g (w * g)^T, which is self-adjoint in the
    quadrature inner product, and its resolvent follows from the Sherman-Morrison
    update of the diagonal part.
    """

    kind = OperatorKind.RANK_ONE

    def __init__(self, rule: QuadratureRule, profile: Callable[[np.ndarray], np.ndarray] | None = None):
        super().__init__(rule)
        profile = profile or (lambda x: np.exp(-(x**2)))
        self.profile = np.asarray(profile(rule.nodes), dtype=float)
        self.profile.setflags(write=False)

    def dense_matrix(self) -> np.ndarray:
        """Dense discretization of the operator (for small grids)."""
        g = self.profile
        return np.diag(self.symbol) + np.outer(g, self.rule.weights * g)

    def _solve(self, z: complex, f: Vector) -> GridFunction:
        assert isinstance(f, GridFunction)
        inverse = 1.0 / (self.symbol - z)
        weighted = self.rule.weights * self.profile * inverse
        s_f = weighted @ f.values
        s_g = weighted @ self.profile
        denominator = 1.0 + s_g
        if abs(denominator) < 1e-14:
            raise SingularSystem(f"rank-one update is singular at z = {z}")
        c = -s_f / denominator
        logger.debug("rank-one update at z=%s: c=%s", z, c)
        return f.with_values(inverse * (f.values + c * self.profile))


def multiplication_resolvent(
    n: int = 2000,
    *,
    focus: Iterable[float] = (),
    resolution: float | None = None,
) -> MultiplicationOperator:
    """
    Resolvent of multiplication by x^3 - x on L^2(-1, 1).

    Args:
        n: Gauss-Legendre nodes when no focus points are given
        focus: Spectral points whose preimages need fine resolution
        resolution: Smallest panel width near the focus preimages

    Returns:
        MultiplicationOperator
    """
    return MultiplicationOperator(cubic_rule(n, focus=focus, resolution=resolution))


def rank_one_perturbed_resolvent(
    n: int = 2000,
    *,
    focus: Iterable[float] = (),
    resolution: float | None = None,
) -> RankOneOperator:
    """Resolvent of x^3 - x plus the Gaussian rank-one perturbation."""
    return RankOneOperator(cubic_rule(n, focus=focus, resolution=resolution))


def fourier_rule(z: complex, k_max: float, n_k: int) -> QuadratureRule:
    """
    Frequency rule on [-k_max, k_max] for the symbol 1 / (4 pi^2 k^2 - z).

    Base panels of order 16 carry about ``n_k`` nodes; panels are graded toward
    the near-poles +/- Re(sqrt z) / 2pi down to half their distance from the
    real axis, and the breakpoints are mirrored so the rule is exactly symmetric.
    """
    if not k_max > 0.0:
        raise InvalidInterval(f"k_max must be positive, got {k_max}")
    if n_k < 1:
        raise InvalidInterval(f"n_k must be positive, got {n_k}")
    n_panels = max(2, n_k // DEFAULT_PANEL_ORDER)
    base = 2.0 * k_max / n_panels
    root = np.sqrt(complex(z))
    focus = abs(root.real) / (2.0 * np.pi)
    min_width = max(abs(root.imag) / (4.0 * np.pi), 1e-12 * k_max)
    half = graded_breakpoints(
        0.0,
        k_max,
        [focus] if focus < k_max else [],
        min_width=min(min_width, base),
        max_width=base,
    )
    breakpoints = np.concatenate([-half[:0:-1], half])
    return composite_gauss_legendre(breakpoints, DEFAULT_PANEL_ORDER)


def _synthesize(k: np.ndarray, weighted: np.ndarray, x: np.ndarray) -> np.ndarray:
    """sum_k weighted_k exp(2 pi i k x), evaluated in blocks of x."""
    out = np.empty(x.size, dtype=complex)
    for start in range(0, x.size, FOURIER_CHUNK):
        block = x[start : start + FOURIER_CHUNK]
        out[start : start + block.size] = np.exp(2j * np.pi * np.outer(block, k)) @ weighted
    return out


def _warn_truncation(f: GridFunction, f_hat: np.ndarray, k_max: float, label: str) -> None:
    peak = float(np.abs(f_hat).max()) if f_hat.size else 0.0
    if peak == 0.0:
        return
    edge = float(np.abs(f.fourier(np.array([-k_max, k_max]))).max())
    if edge / peak > TRUNCATION_TOL:
        warnings.warn(
            f"{label}: |f_hat(k_max)| / max |f_hat| = {edge / peak:.2e} exceeds {TRUNCATION_TOL:g}",
            TruncationWarning,
            stacklevel=4,
        )


def _line_window_rule(x_window: Sequence[float], n_x: int) -> QuadratureRule:
    lo, hi = (float(v) for v in x_window)
    return uniform_rule(lo, hi, n_x)


class FreeLaplacian(_LineOracle):
    """-d^2/dx^2 on L^2(R), diagonalized by the Fourier transform."""

    kind = OperatorKind.FREE_LAPLACIAN
    spectrum_interval = (0.0, math.inf)
    multiplicity_breakpoints = (0.0,)

    def __init__(self, rule: QuadratureRule, k_max: float = 8.0, n_k: int = 4096):
        if not k_max > 0.0 or n_k < 1:
            raise InvalidInterval(f"invalid Fourier truncation k_max={k_max}, n_k={n_k}")
        self.rule = rule
        self.k_max = float(k_max)
        self.n_k = int(n_k)

    def multiplicity(self, lam: float) -> int:
        return 2 if lam > 0.0 else 0

    def _symbol_weights(self, z: complex, f: GridFunction) -> tuple[np.ndarray, np.ndarray]:
        k_rule = fourier_rule(z, self.k_max, self.n_k)
        k = k_rule.nodes
        f_hat = f.fourier(k)
        _warn_truncation(f, f_hat, self.k_max, self.name)
        multiplier = k_rule.weights / (4.0 * np.pi**2 * k**2 - z)
        return k, multiplier * f_hat

    def _solve(self, z: complex, f: Vector) -> GridFunction:
        assert isinstance(f, GridFunction)
        k, weighted = self._symbol_weights(z, f)
        values = _synthesize(k, weighted, self.rule.nodes)
        transform = None
        if f.transform is not None:
            source = f.transform
            transform = lambda q: source(q) / (4.0 * np.pi**2 * np.asarray(q) ** 2 - z)  # noqa: E731
        logger.debug("free Laplacian solve at z=%s on %d frequencies", z, k.size)
        return GridFunction(self.rule, values, transform)

    def pairing(self, z: complex, f: Vector, g: Vector) -> complex:
        """<R(z) f, g> by Parseval, without leaving frequency space."""
        z = self._check_shift(z)
        self._check_vector(f)
        self._check_vector(g)
        assert isinstance(f, GridFunction) and isinstance(g, GridFunction)
        k, weighted = self._symbol_weights(z, f)
        return complex(np.sum(weighted * np.conj(g.fourier(k))))

    def reference_eigenfunction(self, lam: float, f: Vector) -> ReferenceEigenfunction:
        """
        rho_f-weighted eigenfunction limit at ``lam``.

        (1 / (4 pi sqrt(lam))) [f_hat(kappa) e^{i sqrt(lam) x} + f_hat(-kappa) e^{-i sqrt(lam) x}]
        with kappa = sqrt(lam) / 2pi; identically zero below the spectrum.
        """
        self._check_vector(f)
        assert isinstance(f, GridFunction)
        return _plane_wave_reference(float(lam), f)


def _plane_wave_reference(lam: float, f: GridFunction) -> ReferenceEigenfunction:
    if lam <= 0.0:
        return ReferenceEigenfunction(lam, lambda x: np.zeros(np.shape(x), dtype=complex))
    root = math.sqrt(lam)
    kappa = root / (2.0 * np.pi)
    plus, minus = f.fourier(np.array([kappa, -kappa]))
    scale = 1.0 / (4.0 * np.pi * root)

    def evaluate(x: np.ndarray) -> np.ndarray:
        return scale * (plus * np.exp(1j * root * x) + minus * np.exp(-1j * root * x))

    return ReferenceEigenfunction(lam, evaluate)


def free_laplacian_resolvent(
    k_max: float = 8.0,
    n_k: int = 4096,
    *,
    x_window: Sequence[float] = (-20.0, 20.0),
    n_x: int = 1601,
    x_rule: QuadratureRule | None = None,
) -> FreeLaplacian:
    """
    Resolvent of the free Laplacian on the line.

    Args:
        k_max: Frequency cutoff
        n_k: Approximate number of frequency nodes
        x_window: Interval on which functions are sampled
        n_x: Number of midpoint samples in ``x_window``
        x_rule: Explicit sampling rule (overrides the window)

    Returns:
        FreeLaplacian
    """
    rule = x_rule if x_rule is not None else _line_window_rule(x_window, n_x)
    return FreeLaplacian(rule, k_max, n_k)


class SchrodingerOperator(_LineOracle):
    """
    -d^2/dx^2 + v(x), second-order finite differences on [-L, L].

    Unknowns sit at the interior nodes x_j = -L + j h, j = 1..n, h = 2L / (n + 1),
    with zero Dirichlet values at +/- L.
    """

    kind = OperatorKind.SCHRODINGER
    multiplicity_breakpoints = (0.0,)

    def __init__(self, potential: Callable[[np.ndarray], np.ndarray], half_width: float = 60.0, n: int = 6000):
        if n < 100:
            raise InvalidInterval(f"Schrodinger grid needs at least 100 nodes, got {n}")
        if not half_width > 0.0:
            raise InvalidInterval(f"domain half-width must be positive, got {half_width}")
        self.half_width = float(half_width)
        self.h = 2.0 * self.half_width / (n + 1)
        self.rule = uniform_rule(-self.half_width + 0.5 * self.h, self.half_width - 0.5 * self.h, n)
        self.potential = np.asarray(potential(self.rule.nodes), dtype=float)
        if not np.all(np.isfinite(self.potential)):
            raise NumericalFailure("potential is not finite on the grid")
        self.potential.setflags(write=False)
        self.spectrum_interval = (min(0.0, float(self.potential.min())), math.inf)

    def multiplicity(self, lam: float) -> int:
        return 2 if lam > 0.0 else 0

    def system(self, z: complex) -> BandedComplexSystem:
        """Tridiagonal matrix of A_h - z."""
        inv_h2 = 1.0 / self.h**2
        return BandedComplexSystem.from_diagonals(
            {
                -1: -inv_h2,
                0: 2.0 * inv_h2 + self.potential - z,
                1: -inv_h2,
            },
            size=len(self.rule),
        )

    def _check_damping(self, z: complex) -> None:
        if z.real <= 0.0 or z.imag == 0.0:
            return
        damping = 2.0 * math.sqrt(z.real) / abs(z.imag)
        if damping > self.half_width / 5.0:
            warnings.warn(
                f"damping length {damping:.3g} exceeds L/5 = {self.half_width / 5.0:.3g}; "
                "boundary reflections may be visible",
                DomainTooSmallWarning,
                stacklevel=4,
            )

    def _solve(self, z: complex, f: Vector) -> GridFunction:
        assert isinstance(f, GridFunction)
        self._check_damping(z)
        values = solve_banded(self.system(z), f.values)
        return f.with_values(values)


def schrodinger_resolvent(
    v: Callable[[np.ndarray], np.ndarray],
    L: float = 60.0,  # noqa: N803
    n: int = 6000,
) -> SchrodingerOperator:
    """
    Resolvent of -d^2/dx^2 + v on the truncated line.

    Raises:
        InvalidInterval: If n < 100 or L <= 0
    """
    return SchrodingerOperator(v, L, n)


class StripLaplacian(ResolventOracle):
    """
    Dirichlet Laplacian on R x (-1, 1), block-diagonal in transverse modes.

    Mode n couples to the line Laplacian shifted by its threshold (n pi / 2)^2.
    """

    kind = OperatorKind.STRIP

    def __init__(self, line: FreeLaplacian, n_modes: int = 20):
        if n_modes < 1:
            raise InvalidInterval(f"at least one transverse mode is required, got {n_modes}")
        self.line = line
        self.n_modes = int(n_modes)
        self.thresholds = tuple((0.5 * n * np.pi) ** 2 for n in range(1, self.n_modes + 1))
        self.spectrum_interval = (self.thresholds[0], math.inf)
        self.multiplicity_breakpoints = self.thresholds

    @property
    def x_rule(self) -> QuadratureRule:
        return self.line.rule

    def multiplicity(self, lam: float) -> int:
        return 2 * sum(1 for mu in self.thresholds if mu < lam)

    def sample(self, func: Callable[..., Any] | ArrayLike) -> StripGridFunction:
        """
        Project f(x, y) onto the transverse modes.

        Callables are evaluated on an x-by-y tensor grid and projected with a
        (4N + 32)-point Gauss-Legendre rule in y; arrays are taken as mode
        coefficients. Analytic mode transforms are picked up from
        ``func.mode_transforms`` when present.
        """
        x = self.x_rule.nodes
        if callable(func):
            y_rule = gauss_legendre(4 * self.n_modes + 32, -1.0, 1.0)
            samples = np.asarray(func(x[None, :], y_rule.nodes[:, None]), dtype=complex)
            basis = np.stack([transverse_mode(n, y_rule.nodes) for n in range(1, self.n_modes + 1)])
            coefficients = (basis * y_rule.weights) @ samples
            scale = np.abs(coefficients).max()
            coefficients[np.abs(coefficients).max(axis=1) <= MODE_CHOP_TOL * scale] = 0.0
            transforms = dict(getattr(func, "mode_transforms", {}))
        else:
            coefficients = np.asarray(func, dtype=complex)
            transforms = {}
        transforms = {n: t for n, t in transforms.items() if 1 <= n <= self.n_modes}
        sampled = StripGridFunction(self.x_rule, coefficients, transforms)
        self._warn_mode_tail(sampled)
        return sampled

    def _warn_mode_tail(self, f: StripGridFunction) -> None:
        amplitude = np.abs(f.coefficients).max(axis=1)
        peak = amplitude.max()
        if peak > 0.0 and amplitude[-1] / peak > TRUNCATION_TOL:
            warnings.warn(
                f"transverse mode {self.n_modes} carries relative amplitude {amplitude[-1] / peak:.2e}",
                TruncationWarning,
                stacklevel=3,
            )

    def _check_vector(self, f: Vector) -> None:
        if (
            not isinstance(f, StripGridFunction)
            or f.n_modes != self.n_modes
            or not self.x_rule.same_as(f.x_rule)
        ):
            raise GridMismatch("vector does not live on the strip grid")

    def _active_modes(self, f: StripGridFunction) -> list[int]:
        return [n for n in range(1, self.n_modes + 1) if np.any(f.coefficients[n - 1] != 0.0)]

    def _solve(self, z: complex, f: Vector) -> StripGridFunction:
        assert isinstance(f, StripGridFunction)
        coefficients = np.zeros_like(f.coefficients)
        for n in self._active_modes(f):
            shifted = z - self.thresholds[n - 1]
            coefficients[n - 1] = self.line._solve(shifted, f.mode(n)).values
        return f.with_coefficients(coefficients)

    def pairing(self, z: complex, f: Vector, g: Vector) -> complex:
        """<R(z) f, g> as a sum of per-mode frequency-space pairings."""
        z = self._check_shift(z)
        self._check_vector(f)
        self._check_vector(g)
        assert isinstance(f, StripGridFunction) and isinstance(g, StripGridFunction)
        total = 0j
        for n in self._active_modes(f):
            if not np.any(g.coefficients[n - 1] != 0.0):
                continue
            shifted = z - self.thresholds[n - 1]
            total += self.line.pairing(shifted, f.mode(n), g.mode(n))
        return total


def strip_laplacian_resolvent(
    k_max: float = 8.0,
    n_k: int = 4096,
    N_y: int = 20,  # noqa: N803
    *,
    x_window: Sequence[float] = (-20.0, 20.0),
    n_x: int = 1601,
) -> StripLaplacian:
    """Resolvent of the Dirichlet Laplacian on the unit-width strip."""
    return StripLaplacian(FreeLaplacian(_line_window_rule(x_window, n_x), k_max, n_k), N_y)
