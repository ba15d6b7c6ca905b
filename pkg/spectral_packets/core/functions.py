"""Sampled functions: the vector types that resolvent oracles act on.

``GridFunction`` holds complex samples on the nodes of a quadrature rule, so
inner products are weighted sums. ``StripGridFunction`` holds transverse-mode
coefficients on a line grid for functions on the strip R x (-1, 1).

Fourier transforms follow f_hat(k) = integral of exp(-2 pi i k x) f(x) dx.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from spectral_packets.core.errors import GridMismatch
from spectral_packets.core.numerics import QuadratureRule

Transform = Callable[[np.ndarray], np.ndarray]

FOURIER_CHUNK = 256


def transverse_mode(n: int, y: ArrayLike) -> np.ndarray:
    """
    Orthonormal Dirichlet mode on (-1, 1).

    cos(n pi y / 2) for odd n and sin(n pi y / 2) for even n; eigenvalue (n pi / 2)^2.
    """
    if n < 1:
        raise ValueError(f"mode index must be positive, got {n}")
    y = np.asarray(y, dtype=float)
    arg = 0.5 * n * np.pi * y
    return np.cos(arg) if n % 2 == 1 else np.sin(arg)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples on the nodes of a quadrature rule."""

    rule: QuadratureRule
    values: np.ndarray
    transform: Transform | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.shape != self.rule.nodes.shape:
            raise GridMismatch(
                f"{values.size} values for a grid of {len(self.rule)} nodes"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    def _check(self, other: GridFunction) -> None:
        if not isinstance(other, GridFunction) or not self.rule.same_as(other.rule):
            raise GridMismatch("grid functions live on different quadrature rules")

    def inner(self, other: GridFunction) -> complex:
        """<self, other>, conjugate-linear in ``other``."""
        self._check(other)
        return complex(self.rule.integrate(self.values * other.values.conj()))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def is_real(self) -> bool:
        return bool(np.all(self.values.imag == 0.0))

    def fourier(self, k: ArrayLike) -> np.ndarray:
        """
        f_hat at the frequencies ``k``.

        Uses the analytic transform when one is attached, otherwise the
        quadrature sum over the grid, evaluated in blocks of frequencies.
        """
        k = np.asarray(k, dtype=float)
        if self.transform is not None:
            return np.asarray(np.broadcast_to(self.transform(k), k.shape), dtype=complex)
        flat = k.ravel()
        out = np.empty(flat.size, dtype=complex)
        weighted = self.rule.weights * self.values
        for start in range(0, flat.size, FOURIER_CHUNK):
            block = flat[start : start + FOURIER_CHUNK]
            out[start : start + block.size] = np.exp(-2j * np.pi * np.outer(block, self.nodes)) @ weighted
        return out.reshape(k.shape)

    def conj(self) -> GridFunction:
        transform = self.transform
        conj_transform = None
        if transform is not None:
            conj_transform = lambda k: np.conj(transform(-np.asarray(k)))  # noqa: E731
        return GridFunction(self.rule, self.values.conj(), conj_transform)

    def with_values(self, values: ArrayLike) -> GridFunction:
        """Same grid, new samples, no analytic transform."""
        return GridFunction(self.rule, np.asarray(values))

    def __add__(self, other: GridFunction) -> GridFunction:
        self._check(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        self._check(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: complex) -> GridFunction:
        return self.with_values(scalar * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class StripGridFunction:
    """
    Function on the strip stored as transverse-mode coefficients.

    ``coefficients[n - 1]`` holds c_n(x) on the nodes of ``x_rule``, so that
    f(x, y) = sum_n c_n(x) chi_n(y). ``transforms`` optionally maps a mode
    index to the analytic Fourier transform of c_n.
    """

    x_rule: QuadratureRule
    coefficients: np.ndarray
    transforms: Mapping[int, Transform] = field(default_factory=dict)

    def __post_init__(self) -> None:
        coefficients = np.array(self.coefficients, dtype=complex)
        if coefficients.ndim != 2 or coefficients.shape[1] != len(self.x_rule):
            raise GridMismatch(
                f"coefficients of shape {coefficients.shape} for {len(self.x_rule)} x-nodes"
            )
        if coefficients.shape[0] < 1:
            raise GridMismatch("at least one transverse mode is required")
        if not np.all(np.isfinite(coefficients)):
            raise GridMismatch("strip coefficients must be finite")
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "transforms", dict(self.transforms))

    @property
    def n_modes(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def nodes(self) -> np.ndarray:
        return self.x_rule.nodes

    def mode(self, n: int) -> GridFunction:
        """Coefficient c_n as a line grid function."""
        return GridFunction(self.x_rule, self.coefficients[n - 1], self.transforms.get(n))

    def _check(self, other: StripGridFunction) -> None:
        if (
            not isinstance(other, StripGridFunction)
            or other.n_modes != self.n_modes
            or not self.x_rule.same_as(other.x_rule)
        ):
            raise GridMismatch("strip functions use different grids or mode counts")

    def inner(self, other: StripGridFunction) -> complex:
        """<self, other> on the strip, using orthonormality of the modes."""
        self._check(other)
        return complex(np.sum(self.x_rule.integrate(self.coefficients * other.coefficients.conj())))

    def norm(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def is_real(self) -> bool:
        return bool(np.all(self.coefficients.imag == 0.0))

    def conj(self) -> StripGridFunction:
        transforms = {n: self.mode(n).conj().transform for n in self.transforms}
        return StripGridFunction(self.x_rule, self.coefficients.conj(), transforms)

    def mode_energy(self) -> np.ndarray:
        """Squared L2 norm of each mode coefficient."""
        return np.asarray(self.x_rule.integrate(np.abs(self.coefficients) ** 2), dtype=float)

    def evaluate(self, y: ArrayLike) -> np.ndarray:
        """Values on the (y, x) grid, shape (len(y), n_x)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        basis = np.stack([transverse_mode(n, y) for n in range(1, self.n_modes + 1)], axis=1)
        return basis @ self.coefficients

    def with_coefficients(self, coefficients: ArrayLike) -> StripGridFunction:
        return StripGridFunction(self.x_rule, np.asarray(coefficients))

    def __add__(self, other: StripGridFunction) -> StripGridFunction:
        self._check(other)
        return self.with_coefficients(self.coefficients + other.coefficients)

    def __sub__(self, other: StripGridFunction) -> StripGridFunction:
        self._check(other)
        return self.with_coefficients(self.coefficients - other.coefficients)

    def __mul__(self, scalar: complex) -> StripGridFunction:
        return self.with_coefficients(scalar * self.coefficients)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ReferenceEigenfunction:
    """
    Closed-form limit of the wave packet at ``lam``.

    The function is weighted by the spectral density rho_f(lam), so it is
    directly comparable with packets built from the same f.
    """

    lam: float
    evaluate: Callable[[np.ndarray], np.ndarray]
    normalization: str = "rho_weighted"

    def __call__(self, x: ArrayLike) -> np.ndarray:
        return np.asarray(self.evaluate(np.asarray(x, dtype=float)), dtype=complex)
