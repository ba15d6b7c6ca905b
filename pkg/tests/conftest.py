"""Pytest configuration and fixtures for spectral-packets tests."""

from __future__ import annotations

import logging
import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest

from spectral_packets.core.catalog import FUNCTIONS, STRIP_FUNCTIONS, CatalogFunction, StripFunction
from spectral_packets.core.kernels import RationalKernel, equispaced_kernel
from spectral_packets.core.operators import (
    FreeLaplacian,
    MultiplicationOperator,
    RankOneOperator,
    SchrodingerOperator,
    StripLaplacian,
    free_laplacian_resolvent,
    multiplication_resolvent,
    rank_one_perturbed_resolvent,
    schrodinger_resolvent,
    strip_laplacian_resolvent,
)


@pytest.fixture
def temp_workspace() -> Generator[Path, None, None]:
    """Create a temporary workspace directory for testing."""
    with tempfile.TemporaryDirectory() as tmpdir:
        workspace = Path(tmpdir)
        yield workspace


@pytest.fixture(autouse=True)
def restore_logging() -> Generator[None, None, None]:
    """Undo the global logging changes the CLI makes."""
    yield
    logging.disable(logging.NOTSET)
    logging.captureWarnings(False)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator for property suites."""
    return np.random.default_rng(20240611)


@pytest.fixture
def cubic_f() -> CatalogFunction:
    """(2 + x) cos(2 pi x)."""
    return FUNCTIONS["cubic_f"]


@pytest.fixture
def cubic_phi() -> CatalogFunction:
    """(1 + x) cos(pi x)."""
    return FUNCTIONS["cubic_phi"]


@pytest.fixture
def gaussian() -> CatalogFunction:
    """exp(-pi x^2) with its analytic transform."""
    return FUNCTIONS["gaussian"]


@pytest.fixture
def strip_two_mode() -> StripFunction:
    """Two-mode strip function."""
    return STRIP_FUNCTIONS["strip_two_mode"]


@pytest.fixture(scope="session")
def multiplication() -> MultiplicationOperator:
    """Cubic multiplication operator on the default 2000-node grid."""
    return multiplication_resolvent()


@pytest.fixture(scope="session")
def small_multiplication() -> MultiplicationOperator:
    """Cubic multiplication operator on 200 nodes."""
    return multiplication_resolvent(200)


@pytest.fixture(scope="session")
def rank_one() -> RankOneOperator:
    """Rank-one perturbation on the default grid."""
    return rank_one_perturbed_resolvent()


@pytest.fixture(scope="session")
def small_rank_one() -> RankOneOperator:
    """Rank-one perturbation on 200 nodes."""
    return rank_one_perturbed_resolvent(200)


@pytest.fixture(scope="session")
def free_laplacian() -> FreeLaplacian:
    """Free Laplacian with the default Fourier and x grids."""
    return free_laplacian_resolvent()


@pytest.fixture(scope="session")
def schrodinger_short() -> SchrodingerOperator:
    """Schrodinger operator with the short-range potential, L = 60, n = 6000."""
    return schrodinger_resolvent(lambda x: -5.0 * np.cos(0.5 * x) * np.exp(-(x**2) / 32.0))


@pytest.fixture(scope="session")
def small_schrodinger() -> SchrodingerOperator:
    """Coarse Schrodinger operator for property suites."""
    return schrodinger_resolvent(lambda x: -10.0 / (2.0 + x**2), L=30.0, n=1000)


@pytest.fixture(scope="session")
def strip() -> StripLaplacian:
    """Strip Laplacian with 20 transverse modes."""
    return strip_laplacian_resolvent()


@pytest.fixture
def kernels() -> dict[int, RationalKernel]:
    """Equispaced kernels of orders 1..6."""
    return {m: equispaced_kernel(m) for m in range(1, 7)}
