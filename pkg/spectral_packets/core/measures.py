"""Analytic spectral densities and the direct convolution oracle.

The densities here are the ground truth for the wave-packet computations:
rho_{f,g}(lam) such that <E(dlam) f, g> = rho_{f,g}(lam) dlam on the
absolutely continuous spectrum. ``smoothed_density_oracle`` convolves a
density with a scaled kernel by adaptive quadrature, independently of any
resolvent solve.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.integrate import quad

from spectral_packets.core.errors import NoReferenceAvailable, NonpositiveEpsilon, SingularPoint
from spectral_packets.core.functions import GridFunction, StripGridFunction, Transform
from spectral_packets.core.kernels import RationalKernel, eval_scaled
from spectral_packets.core.numerics import SPECTRAL_EDGE, cubic_roots_in_interval, cubic_symbol_derivative
from spectral_packets.core.operators import (
    FreeLaplacian,
    MultiplicationOperator,
    ResolventOracle,
    StripLaplacian,
)

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-12
QUAD_OPTIONS = {"epsabs": 1e-13, "epsrel": 1e-11, "limit": 400}

PointFunction = Callable[[Any], Any]


@dataclass(frozen=True)
class DensityFunction:
    """
    Spectral density with its singular set and support.

    ``evaluate`` is lenient: it returns 0 outside ``valid_interval`` and skips
    degenerate roots, so it can be handed to quadrature. Calling the object is
    strict and raises SingularPoint near a singular point.
    """

    name: str
    evaluate: Callable[[float], float]
    singular_points: tuple[float, ...]
    valid_interval: tuple[float, float]

    def __call__(self, lam: float) -> float:
        lam = float(lam)
        for point in self.singular_points:
            if abs(lam - point) <= SINGULAR_TOL:
                raise SingularPoint(f"{self.name} density is singular at {point:.15g}")
        return self.evaluate(lam)

    def is_regular(self, lam: float) -> bool:
        """True if ``lam`` is not within tolerance of a singular point."""
        return all(abs(float(lam) - p) > SINGULAR_TOL for p in self.singular_points)


def _check_singular(lam: float, points: tuple[float, ...], label: str) -> None:
    for point in points:
        if abs(lam - point) <= SINGULAR_TOL:
            raise SingularPoint(f"{label} density is singular at {point:.15g}")


def _multiplication_value(f: PointFunction, g: PointFunction, lam: float) -> float:
    if not -SPECTRAL_EDGE < lam < SPECTRAL_EDGE:
        return 0.0
    roots = [r.value for r in cubic_roots_in_interval(lam) if not r.is_double]
    if not roots:
        return 0.0
    x = np.asarray(roots)
    terms = np.asarray(f(x)) * np.conj(np.asarray(g(x))) / np.abs(cubic_symbol_derivative(x))
    return float(np.real(terms.sum()))


def rho_multiplication(f: PointFunction, g: PointFunction, lam: float) -> float:
    """
    Density of multiplication by x^3 - x on L^2(-1, 1).

    sum_k f(x_k) conj(g(x_k)) / |p'(x_k)| over the roots of x^3 - x = lam in (-1, 1).

    Raises:
        SingularPoint: Within 1e-12 of 0 or +/- 2 sqrt(3) / 9
    """
    lam = float(lam)
    _check_singular(lam, (-SPECTRAL_EDGE, 0.0, SPECTRAL_EDGE), "multiplication")
    return _multiplication_value(f, g, lam)


def _plane_wave_value(f_hat: Transform, g_hat: Transform, lam: float) -> float:
    if lam <= 0.0:
        return 0.0
    root = math.sqrt(lam)
    k = np.array([root, -root]) / (2.0 * np.pi)
    terms = np.asarray(f_hat(k)) * np.conj(np.asarray(g_hat(k)))
    return float(np.real(terms.sum())) / (4.0 * np.pi * root)


def rho_free_laplacian(f_hat: Transform, g_hat: Transform, lam: float) -> float:
    """
    Density of the free Laplacian on the line.

    (1 / (4 pi sqrt(lam))) [f_hat(kappa) conj(g_hat(kappa)) + f_hat(-kappa) conj(g_hat(-kappa))],
    kappa = sqrt(lam) / 2pi; zero for lam < 0.
    """
    lam = float(lam)
    _check_singular(lam, (0.0,), "free Laplacian")
    return _plane_wave_value(f_hat, g_hat, lam)


def _strip_thresholds(n_modes: int) -> tuple[float, ...]:
    return tuple((0.5 * n * np.pi) ** 2 for n in range(1, n_modes + 1))


def _strip_value(
    f_hat_modes: Mapping[int, Transform],
    g_hat_modes: Mapping[int, Transform],
    lam: float,
    n_modes: int,
) -> float:
    total = 0.0
    for n, threshold in enumerate(_strip_thresholds(n_modes), start=1):
        if n in f_hat_modes and n in g_hat_modes and lam > threshold:
            total += _plane_wave_value(f_hat_modes[n], g_hat_modes[n], lam - threshold)
    return total


def rho_strip(
    f_hat_modes: Mapping[int, Transform],
    lam: float,
    n_modes: int,
    g_hat_modes: Mapping[int, Transform] | None = None,
) -> float:
    """
    Density of the Dirichlet strip Laplacian.

    Sum over modes n <= n_modes with (n pi / 2)^2 < lam of the line density of
    the mode coefficients at lam - (n pi / 2)^2. Missing modes count as zero.

    Raises:
        SingularPoint: Within 1e-12 of any threshold (n pi / 2)^2
    """
    lam = float(lam)
    _check_singular(lam, _strip_thresholds(n_modes), "strip")
    return _strip_value(f_hat_modes, g_hat_modes if g_hat_modes is not None else f_hat_modes, lam, n_modes)


def multiplication_density(f: PointFunction, g: PointFunction | None = None) -> DensityFunction:
    g = g if g is not None else f
    return DensityFunction(
        name="multiplication",
        evaluate=lambda lam: _multiplication_value(f, g, lam),
        singular_points=(-SPECTRAL_EDGE, 0.0, SPECTRAL_EDGE),
        valid_interval=(-SPECTRAL_EDGE, SPECTRAL_EDGE),
    )


def free_laplacian_density(f_hat: Transform, g_hat: Transform | None = None) -> DensityFunction:
    g_hat = g_hat if g_hat is not None else f_hat
    return DensityFunction(
        name="free_laplacian",
        evaluate=lambda lam: _plane_wave_value(f_hat, g_hat, lam),
        singular_points=(0.0,),
        valid_interval=(0.0, math.inf),
    )


def strip_density(
    f_hat_modes: Mapping[int, Transform],
    n_modes: int,
    g_hat_modes: Mapping[int, Transform] | None = None,
) -> DensityFunction:
    g_hat_modes = g_hat_modes if g_hat_modes is not None else f_hat_modes
    thresholds = _strip_thresholds(n_modes)
    return DensityFunction(
        name="strip",
        evaluate=lambda lam: _strip_value(f_hat_modes, g_hat_modes, lam, n_modes),
        singular_points=thresholds,
        valid_interval=(thresholds[0], math.inf),
    )


def constant_density(value: float = 1.0) -> DensityFunction:
    """Synthetic density equal to ``value`` on the whole line."""
    return DensityFunction(
        name="constant",
        evaluate=lambda lam: float(value),
        singular_points=(),
        valid_interval=(-math.inf, math.inf),
    )


def _line_transform(oracle: FreeLaplacian, f: Any) -> Transform:
    sampled = f if isinstance(f, GridFunction) else oracle.sample(f)
    return sampled.fourier


def _mode_transforms(oracle: StripLaplacian, f: Any) -> dict[int, Transform]:
    sampled = f if isinstance(f, StripGridFunction) else oracle.sample(f)
    return {
        n: sampled.mode(n).fourier
        for n in range(1, sampled.n_modes + 1)
        if np.any(sampled.coefficients[n - 1] != 0.0)
    }


def reference_density(oracle: ResolventOracle, f: Any, g: Any | None = None) -> DensityFunction:
    """
    Closed-form density rho_{f,g} for a gallery operator.

    Args:
        oracle: Operator whose spectral measure is wanted
        f: Catalog function or callable (the Fourier operators also accept sampled vectors)
        g: Second function, defaults to ``f``

    Raises:
        NoReferenceAvailable: For operators without a closed-form density
    """
    g = g if g is not None else f
    if isinstance(oracle, MultiplicationOperator):
        if not (callable(f) and callable(g)):
            raise NoReferenceAvailable("multiplication density needs pointwise functions")
        return multiplication_density(f, g)
    if isinstance(oracle, FreeLaplacian):
        return free_laplacian_density(_line_transform(oracle, f), _line_transform(oracle, g))
    if isinstance(oracle, StripLaplacian):
        return strip_density(_mode_transforms(oracle, f), oracle.n_modes, _mode_transforms(oracle, g))
    raise NoReferenceAvailable(f"no closed-form spectral density for the {oracle.name} operator")


def _integrate_panel(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    left_cut: bool,
    right_cut: bool,
) -> float:
    """Integral over [lo, hi]; a cut end is handled with t = end +/- s^2."""
    if left_cut and math.isfinite(lo):
        return quad(lambda s: 2.0 * s * func(lo + s * s), 0.0, math.sqrt(hi - lo), **QUAD_OPTIONS)[0]
    if right_cut and math.isfinite(hi):
        return quad(lambda s: 2.0 * s * func(hi - s * s), 0.0, math.sqrt(hi - lo), **QUAD_OPTIONS)[0]
    return quad(func, lo, hi, **QUAD_OPTIONS)[0]


def smoothed_density_oracle(
    density: DensityFunction,
    kernel: RationalKernel,
    eps: float,
    lam: float,
) -> float:
    """
    [K_eps * rho](lam) by adaptive quadrature.

    The support is split at the singular points; each piece is split again at
    the kernel's peaks lam + eps Re(a_j) and at its midpoint, and the pieces
    adjacent to a singular point or support end use a square-root substitution
    so inverse square-root blow-ups integrate smoothly. Unbounded ends are left
    to quad's infinite-interval mapping.

    Args:
        density: Density to smooth
        kernel: Rational kernel
        eps: Smoothing parameter (> 0)
        lam: Spectral point

    Returns:
        Smoothed density value
    """
    if not eps > 0.0 or not math.isfinite(eps):
        raise NonpositiveEpsilon(f"eps must be positive, got {eps}")
    lam = float(lam)
    lo, hi = density.valid_interval
    cuts = sorted({p for p in density.singular_points if lo < p < hi})
    edges = [lo, *cuts, hi]

    reach = eps * kernel.far_field_radius
    peaks = {lam, lam - reach, lam + reach, *(lam + eps * float(a.real) for a in kernel.poles)}

    def integrand(t: float) -> float:
        return float(eval_scaled(kernel, eps, t - lam)) * density.evaluate(t)

    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        inner = {p for p in peaks if left < p < right}
        if math.isfinite(left) and math.isfinite(right):
            inner.add(0.5 * (left + right))
        elif math.isfinite(left):
            inner.add(left + 1.0)
        elif math.isfinite(right):
            inner.add(right - 1.0)
        points = [left, *sorted(inner), right]
        for a, b in zip(points[:-1], points[1:]):
            total += _integrate_panel(
                integrand,
                a,
                b,
                left_cut=(a == left and math.isfinite(a)),
                right_cut=(b == right and math.isfinite(b)),
            )
    logger.debug("convolution oracle at lam=%g, eps=%g: %.17g", lam, eps, total)
    return total
