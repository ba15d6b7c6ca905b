"""Tests for measures module."""

import math

import numpy as np
import pytest

from spectral_packets.core.catalog import FUNCTIONS, POTENTIALS, STRIP_FUNCTIONS
from spectral_packets.core.errors import NoReferenceAvailable, NonpositiveEpsilon, SingularPoint
from spectral_packets.core.kernels import equispaced_kernel
from spectral_packets.core.measures import (
    constant_density,
    free_laplacian_density,
    multiplication_density,
    reference_density,
    rho_free_laplacian,
    rho_multiplication,
    rho_strip,
    smoothed_density_oracle,
    strip_density,
)
from spectral_packets.core.numerics import SPECTRAL_EDGE
from spectral_packets.core.operators import (
    FreeLaplacian,
    MultiplicationOperator,
    RankOneOperator,
    StripLaplacian,
    schrodinger_resolvent,
)
from spectral_packets.core.wavepacket import smoothed_density


def _ones(x: np.ndarray) -> np.ndarray:
    return np.ones_like(np.asarray(x, dtype=float))


def _gaussian_hat(k: np.ndarray) -> np.ndarray:
    return np.exp(-np.pi * np.asarray(k) ** 2)


class TestMultiplicationDensity:
    """Tests for rho_multiplication."""

    def test_matches_numpy_roots(self) -> None:
        """Test f = g = 1 near 0+ against roots from numpy."""
        lam = 1e-3
        roots = np.roots([1.0, 0.0, -1.0, -lam])
        inside = [r.real for r in roots if abs(r.imag) < 1e-12 and -1.0 < r.real < 1.0]
        expected = sum(1.0 / abs(3.0 * x * x - 1.0) for x in inside)
        assert len(inside) == 2
        assert rho_multiplication(_ones, _ones, lam) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("lam", [0.0, SPECTRAL_EDGE, -SPECTRAL_EDGE, 5e-13])
    def test_singular_points(self, lam: float) -> None:
        """Test that evaluation at a critical value raises SingularPoint."""
        with pytest.raises(SingularPoint):
            rho_multiplication(_ones, _ones, lam)

    def test_zero_outside_spectrum(self) -> None:
        """Test that the density vanishes beyond the spectral edges."""
        f = FUNCTIONS["cubic_f"]
        assert rho_multiplication(f, f, 0.5) == 0.0
        assert rho_multiplication(f, f, -0.39) == 0.0

    def test_hermitian_and_nonnegative(self, rng: np.random.Generator) -> None:
        """Test rho_{f,g} = rho_{g,f} and rho_{f,f} >= 0 at random points."""
        f, g = FUNCTIONS["cubic_f"], FUNCTIONS["cubic_phi"]
        for lam in rng.uniform(-0.38, 0.38, 1000):
            if abs(lam) < 1e-6:
                continue
            assert rho_multiplication(f, g, lam) == pytest.approx(rho_multiplication(g, f, lam), rel=1e-14, abs=1e-15)
            assert rho_multiplication(f, f, lam) >= 0.0

    def test_density_object(self) -> None:
        """Test the strict call and the lenient evaluate of DensityFunction."""
        density = multiplication_density(FUNCTIONS["cubic_f"])
        assert density.valid_interval == (-SPECTRAL_EDGE, SPECTRAL_EDGE)
        assert not density.is_regular(0.0)
        assert density.is_regular(0.1)
        with pytest.raises(SingularPoint):
            density(0.0)
        assert math.isfinite(density.evaluate(0.0))
        assert density(0.1) == pytest.approx(rho_multiplication(FUNCTIONS["cubic_f"], FUNCTIONS["cubic_f"], 0.1))


class TestFourierDensities:
    """Tests for the free Laplacian and strip densities."""

    def test_gaussian_value(self) -> None:
        """Test rho at lambda = 1 for f = exp(-pi x^2)."""
        expected = math.exp(-0.5 / math.pi) / (2.0 * math.pi)
        assert rho_free_laplacian(_gaussian_hat, _gaussian_hat, 1.0) == pytest.approx(expected, rel=1e-14)

    def test_below_spectrum_and_singular(self) -> None:
        """Test zero density below 0 and SingularPoint at 0."""
        assert rho_free_laplacian(_gaussian_hat, _gaussian_hat, -2.0) == 0.0
        with pytest.raises(SingularPoint):
            rho_free_laplacian(_gaussian_hat, _gaussian_hat, 0.0)
        assert rho_free_laplacian(_gaussian_hat, _gaussian_hat, 1e4) < 1e-100

    def test_strip_single_channel(self) -> None:
        """Test that below pi^2 only mode 1 contributes."""
        modes = STRIP_FUNCTIONS["strip_two_mode"].mode_transforms
        lam = np.pi * (np.pi - 1.0)
        expected = rho_free_laplacian(_gaussian_hat, _gaussian_hat, lam - np.pi**2 / 4.0)
        assert rho_strip(modes, lam, 20) == pytest.approx(expected, rel=1e-14)

    def test_strip_two_channels(self) -> None:
        """Test that above pi^2 mode 2 adds its weighted line density."""
        modes = STRIP_FUNCTIONS["strip_two_mode"].mode_transforms
        lam = 20.0
        expected = rho_free_laplacian(_gaussian_hat, _gaussian_hat, lam - np.pi**2 / 4.0) + 4.0 * rho_free_laplacian(
            _gaussian_hat, _gaussian_hat, lam - np.pi**2
        )
        assert rho_strip(modes, lam, 20) == pytest.approx(expected, rel=1e-14)
        assert rho_strip(modes, lam, 40) == pytest.approx(expected, rel=1e-14)

    def test_strip_thresholds_singular(self) -> None:
        """Test SingularPoint at the channel thresholds."""
        modes = STRIP_FUNCTIONS["strip_two_mode"].mode_transforms
        with pytest.raises(SingularPoint):
            rho_strip(modes, np.pi**2, 20)
        density = strip_density(modes, 20)
        assert density.valid_interval[0] == pytest.approx(np.pi**2 / 4.0)


class TestReferenceDensity:
    """Tests for reference_density dispatch."""

    def test_dispatch(
        self,
        multiplication: MultiplicationOperator,
        free_laplacian: FreeLaplacian,
        strip: StripLaplacian,
    ) -> None:
        """Test the closed-form densities chosen per operator."""
        assert reference_density(multiplication, FUNCTIONS["cubic_f"]).name == "multiplication"
        line = reference_density(free_laplacian, FUNCTIONS["gaussian"])
        assert line(1.0) == pytest.approx(rho_free_laplacian(_gaussian_hat, _gaussian_hat, 1.0), rel=1e-14)
        two_mode = reference_density(strip, STRIP_FUNCTIONS["strip_two_mode"])
        assert two_mode(20.0) == pytest.approx(
            rho_strip(STRIP_FUNCTIONS["strip_two_mode"].mode_transforms, 20.0, 20), rel=1e-12
        )

    def test_no_reference(self, rank_one: RankOneOperator, multiplication: MultiplicationOperator) -> None:
        """Test NoReferenceAvailable for operators without a formula."""
        with pytest.raises(NoReferenceAvailable):
            reference_density(rank_one, FUNCTIONS["cubic_f"])
        with pytest.raises(NoReferenceAvailable):
            reference_density(schrodinger_resolvent(POTENTIALS["short_range"], L=20.0, n=400), FUNCTIONS["gaussian"])
        with pytest.raises(NoReferenceAvailable):
            reference_density(multiplication, multiplication.sample(FUNCTIONS["cubic_f"]))


class TestConvolutionOracle:
    """Tests for smoothed_density_oracle."""

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    @pytest.mark.parametrize("eps", [0.1, 0.01])
    def test_constant_density(self, m: int, eps: float) -> None:
        """Test that smoothing a constant density returns the constant."""
        value = smoothed_density_oracle(constant_density(2.5), equispaced_kernel(m), eps, 0.3)
        assert value == pytest.approx(2.5, abs=1e-8)

    def test_rejects_bad_eps(self) -> None:
        """Test that eps <= 0 raises NonpositiveEpsilon."""
        with pytest.raises(NonpositiveEpsilon):
            smoothed_density_oracle(constant_density(), equispaced_kernel(1), 0.0, 0.0)

    def test_converges_to_density(self) -> None:
        """Test that the smoothed density approaches rho as eps shrinks."""
        f = FUNCTIONS["cubic_f"]
        density = multiplication_density(f)
        exact = density(0.1)
        kernel = equispaced_kernel(3)
        coarse = abs(smoothed_density_oracle(density, kernel, 1e-2, 0.1) - exact)
        fine = abs(smoothed_density_oracle(density, kernel, 1e-3, 0.1) - exact)
        assert fine < coarse
        assert fine < 1e-4 * exact

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    @pytest.mark.parametrize("eps", [0.1, 0.01])
    def test_matches_resolvent_path(self, multiplication: MultiplicationOperator, m: int, eps: float) -> None:
        """Test resolvent-path and convolution smoothed densities agree to 1e-7 away from singular points."""
        f = FUNCTIONS["cubic_f"]
        density = multiplication_density(f)
        sampled = multiplication.sample(f)
        kernel = equispaced_kernel(m)
        # 20 points at least 0.05 from 0 and +/- 2 sqrt(3) / 9
        regular = np.linspace(0.05, SPECTRAL_EDGE - 0.05, 10)
        for lam in np.concatenate([-regular, regular]):
            direct = smoothed_density_oracle(density, kernel, eps, lam)
            via_resolvent = smoothed_density(multiplication, kernel, eps, lam, sampled)
            assert via_resolvent == pytest.approx(direct, abs=1e-7)

    @pytest.mark.parametrize("m", [1, 3])
    def test_free_laplacian_matches_resolvent_path(self, free_laplacian: FreeLaplacian, m: int) -> None:
        """Test the two paths for the free Laplacian with a Gaussian."""
        f = free_laplacian.sample(FUNCTIONS["gaussian"])
        density = free_laplacian_density(_gaussian_hat)
        kernel = equispaced_kernel(m)
        direct = smoothed_density_oracle(density, kernel, 0.1, 1.0)
        via_resolvent = smoothed_density(free_laplacian, kernel, 0.1, 1.0, f)
        assert via_resolvent == pytest.approx(direct, abs=1e-8)
