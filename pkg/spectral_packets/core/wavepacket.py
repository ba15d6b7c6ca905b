"""Wave-packet assembly from shifted resolvent solves.

For a kernel with poles a_k and residues alpha_k the smoothed spectral
projection at lam is

    u = (1 / 2 pi i) sum_k [ alpha_k R(lam + eps a_k) f - conj(alpha_k) R(lam + eps conj(a_k)) f ],

which equals the integral of K_eps(t - lam) dE(t) f. With m = 1 and a = i this
is Stone's formula (1 / 2 pi i) [R(lam + i eps) - R(lam - i eps)] f. When the
operator and f are real the conjugate terms are complex conjugates of each
other and u = (1 / pi) sum_k Im(alpha_k R(lam + eps a_k) f), which needs only
m solves.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, TypeVar

import numpy as np
from numpy.typing import ArrayLike

from spectral_packets.core.errors import (
    EmptyWindow,
    InsufficientData,
    InvalidInterval,
    NonpositiveEpsilon,
    NumericalFailure,
)
from spectral_packets.core.functions import GridFunction, ReferenceEigenfunction, StripGridFunction
from spectral_packets.core.kernels import RationalKernel, build_kernel, equispaced_kernel
from spectral_packets.core.measures import reference_density
from spectral_packets.core.numerics import fit_loglog_slope, graded_rule
from spectral_packets.core.operators import ResolventOracle, Vector
from spectral_packets.core.types import ErrorSweep, SweepMode, SweepPoint

__all__ = [
    "ReferenceEigenfunction",
    "WavePacket",
    "assemble",
    "default_eps_grid",
    "error_sweep",
    "smoothed_density",
    "spectral_pairing",
    "sup_error",
    "total_mass",
    "weak_pairing",
]

logger = logging.getLogger(__name__)

REALITY_TOL = 1e-10
MIN_SWEEP_POINTS = 4
MIN_SWEEP_DECADES = 1.5

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class WavePacket:
    """Smoothed spectral projection u at (lam, eps) for one kernel."""

    lam: float
    eps: float
    kernel: RationalKernel
    values: Vector
    solves: int

    @property
    def kernel_order(self) -> int:
        return self.kernel.order

    def imaginary_ratio(self) -> float:
        """||Im u|| / ||u||, zero for an exactly real packet."""
        norm = self.values.norm()
        if norm == 0.0:
            return 0.0
        data = _data(self.values)
        imaginary = _rebuild(self.values, 1j * data.imag)
        return imaginary.norm() / norm


def _data(vector: Vector) -> np.ndarray:
    return vector.values if isinstance(vector, GridFunction) else vector.coefficients


def _rebuild(template: Vector, data: np.ndarray) -> Vector:
    if isinstance(template, GridFunction):
        return template.with_values(data)
    return template.with_coefficients(data)


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps > 0.0 or not math.isfinite(eps):
        raise NonpositiveEpsilon(f"eps must be positive, got {eps}")
    return eps


def _ordered_map(func: Callable[[Any], T], items: Sequence[Any], workers: int | None) -> list[T]:
    """Map preserving input order, on a thread pool when ``workers`` > 1."""
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _use_symmetry(oracle: ResolventOracle, exploit_symmetry: bool, *vectors: Vector) -> bool:
    return exploit_symmetry and oracle.is_real and all(v.is_real() for v in vectors)


def assemble(
    oracle: ResolventOracle,
    kernel: RationalKernel,
    eps: float,
    lam: float,
    f: Vector,
    *,
    exploit_symmetry: bool = True,
    workers: int | None = None,
) -> WavePacket:
    """
    Assemble the wave packet u at (lam, eps).

    Args:
        oracle: Resolvent of the operator
        kernel: Rational kernel of order m
        eps: Smoothing parameter (> 0)
        lam: Spectral point
        f: Vector on the oracle's grid
        exploit_symmetry: Use m solves instead of 2m for real operators and real f
        workers: Thread count for the per-pole solves

    Returns:
        WavePacket with the number of resolvent applications in ``solves``

    Raises:
        NonpositiveEpsilon: If eps <= 0
        NumericalFailure: If the packet is not finite
    """
    eps = _check_eps(eps)
    lam = float(lam)
    alpha = kernel.residues
    shifts = [lam + eps * complex(a) for a in kernel.poles]
    data = _data(f)

    if _use_symmetry(oracle, exploit_symmetry, f):
        solved = _ordered_map(lambda z: oracle.apply(z, f), shifts, workers)
        total = np.zeros(data.shape, dtype=float)
        for a_k, r in zip(alpha, solved):
            total += (a_k * _data(r)).imag
        values = total / np.pi
        solves = len(shifts)
    else:
        conjugates = [complex(z).conjugate() for z in shifts]
        solved = _ordered_map(lambda z: oracle.apply(z, f), shifts + conjugates, workers)
        m = len(shifts)
        total = np.zeros(data.shape, dtype=complex)
        for k, a_k in enumerate(alpha):
            total += a_k * _data(solved[k]) - np.conj(a_k) * _data(solved[m + k])
        values = total / (2j * np.pi)
        solves = 2 * m

    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"wave packet at lam={lam:g}, eps={eps:g} is not finite")
    logger.debug("assembled packet lam=%g eps=%g m=%d with %d solves", lam, eps, kernel.order, solves)
    return WavePacket(lam=lam, eps=eps, kernel=kernel, values=_rebuild(f, values), solves=solves)


def weak_pairing(u: WavePacket | Vector, phi: Vector) -> complex:
    """<u, phi>, conjugate-linear in ``phi``; raises GridMismatch on different grids."""
    values = u.values if isinstance(u, WavePacket) else u
    return values.inner(phi)  # type: ignore[arg-type]


def spectral_pairing(
    oracle: ResolventOracle,
    kernel: RationalKernel,
    eps: float,
    lam: float,
    f: Vector,
    phi: Vector,
    *,
    exploit_symmetry: bool = True,
    workers: int | None = None,
) -> complex:
    """
    <u, phi> computed pole by pole through ``oracle.pairing``.

    By linearity this equals ``weak_pairing(assemble(...), phi)``; operators
    with a frequency-space pairing never form u on the grid.
    """
    eps = _check_eps(eps)
    lam = float(lam)
    alpha = kernel.residues
    shifts = [lam + eps * complex(a) for a in kernel.poles]

    if _use_symmetry(oracle, exploit_symmetry, f, phi):
        pairs = _ordered_map(lambda z: oracle.pairing(z, f, phi), shifts, workers)
        return complex(sum((a_k * p).imag for a_k, p in zip(alpha, pairs)) / np.pi)

    conjugates = [complex(z).conjugate() for z in shifts]
    pairs = _ordered_map(lambda z: oracle.pairing(z, f, phi), shifts + conjugates, workers)
    m = len(shifts)
    total = sum(a_k * pairs[k] - np.conj(a_k) * pairs[m + k] for k, a_k in enumerate(alpha))
    return complex(total / (2j * np.pi))


def smoothed_density(
    oracle: ResolventOracle,
    kernel: RationalKernel,
    eps: float,
    lam: float,
    f: Vector,
    *,
    exploit_symmetry: bool = True,
    workers: int | None = None,
) -> float:
    """
    Smoothed spectral density [K_eps * rho_f](lam) = <u, f>.

    Raises:
        NumericalFailure: If the self-pairing is not real to 1e-10 relative
    """
    value = spectral_pairing(
        oracle, kernel, eps, lam, f, f, exploit_symmetry=exploit_symmetry, workers=workers
    )
    scale = max(abs(value.real), f.norm() ** 2)
    if abs(value.imag) > REALITY_TOL * scale:
        raise NumericalFailure(
            f"smoothed density at lam={lam:g} has imaginary part {value.imag:.3e} (real {value.real:.3e})"
        )
    return value.real


def total_mass(
    oracle: ResolventOracle,
    kernel: RationalKernel,
    eps: float,
    f: Vector,
    interval: tuple[float, float] | None = None,
    *,
    max_width: float = 0.02,
    order: int = 16,
    workers: int | None = None,
) -> float:
    """
    Integral of the smoothed density over ``interval``.

    For a normalized kernel this approaches ||f||^2 once the interval covers
    the spectrum. Gauss-Legendre lambda-panels are graded toward the
    multiplicity breakpoints down to width eps / 2.

    Args:
        interval: Integration range; defaults to the spectrum widened by 0.5
            (required for unbounded spectra)
        max_width: Largest lambda-panel width
    """
    eps = _check_eps(eps)
    if interval is None:
        lo, hi = oracle.spectrum_interval
        if not math.isfinite(hi):
            raise InvalidInterval(f"an integration interval is required for the {oracle.name} operator")
        interval = (lo - 0.5, hi + 0.5)
    a, b = (float(v) for v in interval)
    rule = graded_rule(
        a,
        b,
        oracle.multiplicity_breakpoints,
        min_width=min(0.5 * eps, max_width),
        max_width=max_width,
        order=order,
    )
    logger.info("integrating smoothed density over [%g, %g] at %d points", a, b, len(rule))
    values = _ordered_map(lambda lam: smoothed_density(oracle, kernel, eps, lam, f), list(rule.nodes), workers)
    return float(rule.integrate(np.asarray(values)))


def sup_error(
    u: WavePacket | GridFunction,
    ref: ReferenceEigenfunction | Callable[[np.ndarray], ArrayLike],
    window: tuple[float, float],
    relative: bool = True,
) -> float:
    """
    max |u - ref| over the grid nodes inside ``window``.

    Args:
        u: Packet or grid function on a line grid
        ref: Reference function evaluated at the nodes
        window: Closed comparison interval
        relative: Divide by max |ref| over the same nodes

    Raises:
        EmptyWindow: If no grid node lies in the window
    """
    values = u.values if isinstance(u, WavePacket) else u
    if not isinstance(values, GridFunction):
        raise EmptyWindow("sup errors are defined for line grids only")
    lo, hi = window
    mask = (values.nodes >= lo) & (values.nodes <= hi)
    if not np.any(mask):
        raise EmptyWindow(f"no grid nodes in window [{lo:g}, {hi:g}]")
    expected = np.asarray(ref(values.nodes[mask]), dtype=complex)
    error = float(np.abs(values.values[mask] - expected).max())
    if not relative:
        return error
    scale = float(np.abs(expected).max())
    if scale == 0.0:
        raise NumericalFailure("reference vanishes on the comparison window")
    return error / scale


def default_eps_grid() -> list[float]:
    """Log-spaced 10^(-j/4) from 1 down to 1e-3."""
    return [10.0 ** (-0.25 * j) for j in range(13)]


def _validate_eps(eps_values: Iterable[float]) -> list[float]:
    values = [_check_eps(e) for e in eps_values]
    if len(values) < MIN_SWEEP_POINTS:
        raise InsufficientData(f"a sweep needs at least {MIN_SWEEP_POINTS} eps values, got {len(values)}")
    decades = math.log10(max(values) / min(values))
    if decades < MIN_SWEEP_DECADES:
        raise InsufficientData(
            f"eps values span {decades:.2f} decades, at least {MIN_SWEEP_DECADES} are required"
        )
    return values


def _sweep_kernel(m: int, pole_placement: Callable[[int], ArrayLike] | None) -> RationalKernel:
    if pole_placement is None:
        return equispaced_kernel(m)
    return build_kernel(pole_placement(m))


def _as_vector(oracle: ResolventOracle, func: Any) -> Vector:
    return func if isinstance(func, (GridFunction, StripGridFunction)) else oracle.sample(func)


def error_sweep(
    oracle: ResolventOracle,
    f: Any,
    *,
    lam: float,
    orders: Sequence[int],
    eps_values: Iterable[float],
    mode: SweepMode = SweepMode.WEAK,
    phi: Any | None = None,
    window: tuple[float, float] = (-10.0, 10.0),
    pole_placement: Callable[[int], ArrayLike] | None = None,
    noise_floor: float = 0.0,
    workers: int | None = None,
    exploit_symmetry: bool = True,
) -> list[ErrorSweep]:
    """
    Relative errors against the closed-form reference over an eps grid.

    Args:
        oracle: Operator resolvent
        f: Catalog function, callable or vector on the oracle's grid
        lam: Spectral point
        orders: Kernel orders m
        eps_values: At least 4 smoothing parameters spanning 1.5 decades
        mode: WEAK compares <u, phi> with rho_{f,phi}(lam); SUP compares u with
            the reference eigenfunction on ``window``
        phi: Test function for WEAK mode
        window: Comparison window for SUP mode
        pole_placement: Maps m to kernel poles; equispaced poles when omitted
        noise_floor: Errors at or below this value are reported but not fitted
        workers: Thread count over the (m, eps) points

    Returns:
        One ErrorSweep per order, points in the order of ``eps_values``

    Raises:
        InsufficientData: Too few eps values or too narrow a span
        NoReferenceAvailable: No closed-form reference for the operator
    """
    eps_list = _validate_eps(eps_values)
    mode = SweepMode(mode)
    f_vec = _as_vector(oracle, f)

    if mode is SweepMode.WEAK:
        if phi is None:
            raise ValueError("weak sweeps need a test function phi")
        phi_vec = _as_vector(oracle, phi)
        reference = reference_density(oracle, f, phi)(lam)
        if reference == 0.0:
            raise NumericalFailure(f"reference density vanishes at lam={lam:g}")

        def measure(task: tuple[RationalKernel, float]) -> float:
            kernel, eps = task
            value = spectral_pairing(oracle, kernel, eps, lam, f_vec, phi_vec, exploit_symmetry=exploit_symmetry)
            return abs(value - reference) / abs(reference)

    else:
        target = oracle.reference_eigenfunction(lam, f_vec)

        def measure(task: tuple[RationalKernel, float]) -> float:
            kernel, eps = task
            packet = assemble(oracle, kernel, eps, lam, f_vec, exploit_symmetry=exploit_symmetry)
            return sup_error(packet, target, window)

    kernels = [_sweep_kernel(int(m), pole_placement) for m in orders]
    tasks = [(kernel, eps) for kernel in kernels for eps in eps_list]
    logger.info("error sweep at lam=%g: %d orders x %d eps values", lam, len(kernels), len(eps_list))
    errors = _ordered_map(measure, tasks, workers)

    sweeps = []
    for i, kernel in enumerate(kernels):
        chunk = errors[i * len(eps_list) : (i + 1) * len(eps_list)]
        points = [
            SweepPoint(eps=eps, error=err, fitted=bool(err > noise_floor))
            for eps, err in zip(eps_list, chunk)
        ]
        sweep = ErrorSweep(order=kernel.order, mode=mode, lam=float(lam), points=points)
        pairs = sweep.fitted_pairs()
        if len(pairs) >= 3:
            sweep.slope = fit_loglog_slope(pairs)
        else:
            logger.warning("order %d: only %d points above the noise floor, slope not fitted", kernel.order, len(pairs))
        logger.info("order %d: slope %s", kernel.order, sweep.slope)
        sweeps.append(sweep)
    return sweeps
