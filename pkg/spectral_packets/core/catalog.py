"""Built-in catalog of test functions and potentials referenced by id."""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from spectral_packets.core.errors import ConfigError


@dataclass(frozen=True)
class CatalogFunction:
    """Real function on a line domain, optionally with its analytic Fourier transform."""

    name: str
    description: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    transform: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x: ArrayLike) -> np.ndarray:
        return self.evaluate(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class StripFunction:
    """Function f(x, y) on the strip with analytic transforms of its mode coefficients."""

    name: str
    description: str
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    mode_transforms: Mapping[int, Callable[[np.ndarray], np.ndarray]] = field(default_factory=dict)

    def __call__(self, x: ArrayLike, y: ArrayLike) -> np.ndarray:
        return self.evaluate(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


@dataclass(frozen=True)
class Potential:
    """Real potential v(x) for the Schrodinger operator."""

    name: str
    description: str
    evaluate: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: ArrayLike) -> np.ndarray:
        return self.evaluate(np.asarray(x, dtype=float))


def _gaussian_transform(k: np.ndarray) -> np.ndarray:
    return np.exp(-np.pi * np.asarray(k) ** 2)


FUNCTIONS: dict[str, CatalogFunction] = {
    f.name: f
    for f in (
        CatalogFunction(
            "cubic_f",
            "(2 + x) cos(2 pi x)",
            lambda x: (2.0 + x) * np.cos(2.0 * np.pi * x),
        ),
        CatalogFunction(
            "cubic_phi",
            "(1 + x) cos(pi x)",
            lambda x: (1.0 + x) * np.cos(np.pi * x),
        ),
        CatalogFunction(
            "gaussian",
            "exp(-pi x^2)",
            lambda x: np.exp(-np.pi * x**2),
            _gaussian_transform,
        ),
        CatalogFunction(
            "gaussian_wide",
            "exp(-x^2)",
            lambda x: np.exp(-(x**2)),
            lambda k: np.sqrt(np.pi) * np.exp(-(np.pi**2) * np.asarray(k) ** 2),
        ),
    )
}

STRIP_FUNCTIONS: dict[str, StripFunction] = {
    f.name: f
    for f in (
        StripFunction(
            "strip_mode_one",
            "exp(-pi x^2) cos(pi y / 2)",
            lambda x, y: np.exp(-np.pi * x**2) * np.cos(0.5 * np.pi * y),
            {1: _gaussian_transform},
        ),
        StripFunction(
            "strip_two_mode",
            "exp(-pi x^2) (cos(pi y / 2) + 2 sin(pi y))",
            lambda x, y: np.exp(-np.pi * x**2) * (np.cos(0.5 * np.pi * y) + 2.0 * np.sin(np.pi * y)),
            {1: _gaussian_transform, 2: lambda k: 2.0 * _gaussian_transform(k)},
        ),
    )
}

POTENTIALS: dict[str, Potential] = {
    v.name: v
    for v in (
        Potential(
            "short_range",
            "-5 cos(x / 2) exp(-x^2 / 32)",
            lambda x: -5.0 * np.cos(0.5 * x) * np.exp(-(x**2) / 32.0),
        ),
        Potential("long_range", "-10 / (2 + x^2)", lambda x: -10.0 / (2.0 + x**2)),
        Potential("zero", "0", lambda x: np.zeros_like(x, dtype=float)),
    )
}


def get_function(name: str, *, field_name: str = "f") -> CatalogFunction:
    """Look up a line function by id."""
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise ConfigError(
            f"unknown function id '{name}' (choose from {', '.join(sorted(FUNCTIONS))})",
            field=field_name,
        ) from None


def get_strip_function(name: str, *, field_name: str = "f") -> StripFunction:
    """Look up a strip function by id."""
    try:
        return STRIP_FUNCTIONS[name]
    except KeyError:
        raise ConfigError(
            f"unknown strip function id '{name}' (choose from {', '.join(sorted(STRIP_FUNCTIONS))})",
            field=field_name,
        ) from None


def get_potential(name: str) -> Potential:
    """Look up a potential by id."""
    try:
        return POTENTIALS[name]
    except KeyError:
        raise ConfigError(
            f"unknown potential id '{name}' (choose from {', '.join(sorted(POTENTIALS))})",
            field="potential",
        ) from None
