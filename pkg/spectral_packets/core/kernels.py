"""Rational convolution kernels of order m.

A kernel is determined by m distinct poles a_j in the upper half-plane,

    K(x) = (1 / 2 pi i) sum_j [ alpha_j / (x - a_j) - conj(alpha_j) / (x - conj(a_j)) ],

with residues alpha_j chosen so that K integrates to one and its moments of
order 1..m-1 vanish. For |x| beyond ``far_field_radius`` the kernel is
evaluated from its convergent large-|x| series

    K(x) = (1 / pi) sum_{p >= m} Im(M_p) x^-(p + 1),   M_p = sum_j alpha_j a_j^p,

which avoids the cancellation of the partial-fraction sum and gives exact
tail integrals for the moment checks.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import quad

from spectral_packets.core.errors import (
    KernelConstructionError,
    NonpositiveEpsilon,
    PoleInLowerHalfPlane,
)
from spectral_packets.core.numerics import solve_vandermonde, vandermonde_residuals
from spectral_packets.core.types import MomentReport

logger = logging.getLogger(__name__)

FAR_FIELD_FACTOR = 4.0
FAR_FIELD_TERMS = 48
IMAGINARY_RESIDUE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RationalKernel:
    """Partial-fraction kernel with poles, residues and decay constant C_K."""

    poles: np.ndarray
    residues: np.ndarray
    decay_constant_estimate: float = math.nan
    _tail_coefficients: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        poles = np.array(self.poles, dtype=complex).ravel()
        residues = np.array(self.residues, dtype=complex).ravel()
        if poles.size == 0 or poles.shape != residues.shape:
            raise KernelConstructionError("poles and residues must be non-empty and of equal length")
        poles.setflags(write=False)
        residues.setflags(write=False)
        powers = np.arange(poles.size, poles.size + FAR_FIELD_TERMS)
        coefficients = ((poles[None, :] ** powers[:, None]) @ residues).imag
        coefficients.setflags(write=False)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", residues)
        object.__setattr__(self, "_tail_coefficients", coefficients)

    @property
    def order(self) -> int:
        return int(self.poles.size)

    @property
    def far_field_radius(self) -> float:
        """Radius beyond which the large-|x| series is used."""
        return FAR_FIELD_FACTOR * float(np.abs(self.poles).max())

    def moment(self, p: int) -> complex:
        """M_p = sum_j alpha_j a_j**p."""
        return complex(np.sum(self.residues * self.poles**p))

    def __call__(self, x: ArrayLike) -> float | np.ndarray:
        return eval_kernel(self, x)


def equispaced_poles(m: int, half_width: float = 1.0, height: float = 1.0) -> np.ndarray:
    """
    Poles equally spaced on the segment [-half_width + i*height, half_width + i*height].

    m = 1 gives the single pole i*height (the Poisson kernel).
    """
    if m < 1:
        raise KernelConstructionError(f"kernel order must be at least 1, got {m}")
    if m == 1:
        return np.array([1j * height])
    real = -half_width + 2.0 * half_width * np.arange(m) / (m - 1)
    return real + 1j * height


def build_kernel(poles: ArrayLike) -> RationalKernel:
    """
    Build the rational kernel with the given poles.

    Args:
        poles: Distinct poles, all with positive imaginary part

    Returns:
        RationalKernel with residues and decay constant populated

    Raises:
        PoleInLowerHalfPlane: If any pole has Im(a) <= 0
        DuplicatePoles: If two poles coincide
    """
    a = np.asarray(poles, dtype=complex).ravel()
    if a.size == 0:
        raise KernelConstructionError("at least one pole is required")
    if np.any(a.imag <= 0.0):
        raise PoleInLowerHalfPlane(f"poles must lie in the upper half-plane: {a[a.imag <= 0.0]}")
    residues = solve_vandermonde(a)
    logger.debug(
        "kernel of order %d: max moment residual %.3e",
        a.size,
        float(vandermonde_residuals(a, residues).max()),
    )
    draft = RationalKernel(a, residues)
    return RationalKernel(a, residues, _estimate_decay_constant(draft))


@lru_cache(maxsize=16)
def equispaced_kernel(m: int) -> RationalKernel:
    """Kernel of order m with the default equispaced poles (cached)."""
    return build_kernel(equispaced_poles(m))


def _near_field(kernel: RationalKernel, x: np.ndarray) -> np.ndarray:
    a = kernel.poles
    alpha = kernel.residues
    shifted = x[:, None] - a[None, :]
    total = (alpha / shifted - alpha.conj() / shifted.conj()).sum(axis=1)
    values = total / (2j * np.pi)
    scale = (np.abs(alpha) / np.abs(shifted)).sum(axis=1) / np.pi
    if np.any(np.abs(values.imag) > IMAGINARY_RESIDUE_TOL * np.maximum(scale, 1.0)):
        raise KernelConstructionError("kernel evaluation produced a non-real value")
    return values.real


def _far_field(kernel: RationalKernel, x: np.ndarray) -> np.ndarray:
    y = 1.0 / x
    acc = np.zeros_like(y)
    for c in kernel._tail_coefficients[::-1]:
        acc = acc * y + c
    return acc * y ** (kernel.order + 1) / np.pi


def eval_kernel(kernel: RationalKernel, x: ArrayLike) -> float | np.ndarray:
    """
    Evaluate K at real points.

    Args:
        kernel: Rational kernel
        x: Scalar or array of real points

    Returns:
        Real value(s) of the kernel, with the shape of ``x``
    """
    xs = np.asarray(x, dtype=float)
    flat = xs.ravel()
    out = np.empty(flat.shape)
    far = np.abs(flat) >= kernel.far_field_radius
    if np.any(~far):
        out[~far] = _near_field(kernel, flat[~far])
    if np.any(far):
        out[far] = _far_field(kernel, flat[far])
    if xs.ndim == 0:
        return float(out[0])
    return out.reshape(xs.shape)


def eval_scaled(kernel: RationalKernel, eps: float, x: ArrayLike) -> float | np.ndarray:
    """K_eps(x) = K(x / eps) / eps."""
    if not eps > 0.0 or not math.isfinite(eps):
        raise NonpositiveEpsilon(f"eps must be positive, got {eps}")
    return eval_kernel(kernel, np.asarray(x, dtype=float) / eps) / eps


def _estimate_decay_constant(kernel: RationalKernel) -> float:
    radii = np.concatenate([[0.0], np.geomspace(1e-3, 1e6, 1201)])
    x = np.concatenate([-radii[::-1], radii])
    weighted = np.abs(eval_kernel(kernel, x)) * (1.0 + np.abs(x)) ** (kernel.order + 1)
    return float(weighted.max())


def _tail_moment(kernel: RationalKernel, q: int, radius: float) -> float:
    """Exact integral of x**q K(x) over |x| > radius from the far-field series."""
    total = 0.0
    for offset, c in enumerate(kernel._tail_coefficients):
        p = kernel.order + offset
        if c == 0.0 or (p - q - 1) % 2 == 1:
            continue
        total += 2.0 * c * radius ** (q - p) / (p - q)
    return total / np.pi


def _interior_breakpoints(kernel: RationalKernel, center: float, scale: float) -> list[float]:
    radius = kernel.far_field_radius
    inner = {0.0, *(float(a.real) for a in kernel.poles if abs(a.real) < radius)}
    return sorted(center + scale * t for t in {-radius, radius, *inner})


def _kernel_moment(kernel: RationalKernel, q: int) -> float:
    breaks = _interior_breakpoints(kernel, 0.0, 1.0)

    def integrand(x: float) -> float:
        return x**q * float(eval_kernel(kernel, x))

    interior = sum(
        quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        for lo, hi in zip(breaks[:-1], breaks[1:])
    )
    return interior + _tail_moment(kernel, q, kernel.far_field_radius)


def integrate_kernel(kernel: RationalKernel, eps: float = 1.0, shift: float = 0.0) -> float:
    """
    Integral of K_eps(x - shift) over the real line.

    The scaled kernel is integrated adaptively on |x - shift| <= eps * R and the
    remainder is added exactly from the far-field series (it does not depend on
    eps or shift).
    """
    if not eps > 0.0:
        raise NonpositiveEpsilon(f"eps must be positive, got {eps}")
    breaks = _interior_breakpoints(kernel, shift, eps)

    def integrand(x: float) -> float:
        return float(eval_scaled(kernel, eps, x - shift))

    interior = sum(
        quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        for lo, hi in zip(breaks[:-1], breaks[1:])
    )
    return interior + _tail_moment(kernel, 0, kernel.far_field_radius)


def verify_moments(kernel: RationalKernel, tol: float = 1e-7) -> MomentReport:
    """
    Check normalization, vanishing moments and decay of a kernel.

    Args:
        kernel: Kernel to check
        tol: Tolerance for the normalization and moment errors

    Returns:
        MomentReport; failed conditions are listed in ``failures``
    """
    normalization_error = abs(_kernel_moment(kernel, 0) - 1.0)
    moment_errors = [abs(_kernel_moment(kernel, p)) for p in range(1, kernel.order)]

    x = np.geomspace(1e2, 1e6, 41)
    magnitude = np.abs(eval_kernel(kernel, x))
    mask = magnitude > 0.0
    if mask.sum() >= 2:
        decay = float(np.polyfit(np.log(x[mask]), np.log(magnitude[mask]), 1)[0])
    else:
        decay = -math.inf

    failures = []
    if not normalization_error <= tol:
        failures.append(f"normalization error {normalization_error:.3e} exceeds {tol:.1e}")
    for p, err in enumerate(moment_errors, start=1):
        if not err <= tol:
            failures.append(f"moment {p} error {err:.3e} exceeds {tol:.1e}")

    return MomentReport(
        order=kernel.order,
        tol=tol,
        normalization_error=normalization_error,
        moment_errors=moment_errors,
        decay_exponent_fit=decay,
        failures=failures,
    )
