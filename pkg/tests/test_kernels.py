"""Tests for kernels module."""

import math

import numpy as np
import pytest

from spectral_packets.core.errors import (
    DuplicatePoles,
    KernelConstructionError,
    NonpositiveEpsilon,
    PoleInLowerHalfPlane,
)
from spectral_packets.core.kernels import (
    RationalKernel,
    _far_field,
    _near_field,
    build_kernel,
    equispaced_kernel,
    equispaced_poles,
    eval_kernel,
    eval_scaled,
    integrate_kernel,
    verify_moments,
)


class TestKernelConstruction:
    """Tests for building kernels from poles."""

    def test_poisson_kernel(self) -> None:
        """Test that m = 1 is the Poisson kernel 1 / (pi (1 + x^2))."""
        kernel = equispaced_kernel(1)
        np.testing.assert_allclose(kernel.poles, [1j])
        np.testing.assert_allclose(kernel.residues, [1.0])
        x = np.array([-50.0, -4.0, -1.0, 0.0, 0.3, 3.99, 4.0, 17.0, 1e4])
        np.testing.assert_allclose(eval_kernel(kernel, x), 1.0 / (np.pi * (1.0 + x**2)), rtol=1e-13)

    def test_equispaced_poles(self) -> None:
        """Test pole placement on the segment [-1 + i, 1 + i]."""
        np.testing.assert_allclose(equispaced_poles(3), [-1 + 1j, 1j, 1 + 1j])
        np.testing.assert_allclose(equispaced_poles(1, height=2.0), [2j])

    def test_equispaced_kernel_is_cached(self) -> None:
        """Test that repeated requests return the same kernel object."""
        assert equispaced_kernel(4) is equispaced_kernel(4)

    def test_order_and_moments(self) -> None:
        """Test the order property and the normalized zeroth moment."""
        kernel = equispaced_kernel(5)
        assert kernel.order == 5
        assert kernel.moment(0) == pytest.approx(1.0, abs=1e-12)
        for p in range(1, 5):
            assert abs(kernel.moment(p)) < 1e-12

    def test_decay_constant_populated(self, kernels: dict[int, RationalKernel]) -> None:
        """Test that build_kernel estimates C_K."""
        for kernel in kernels.values():
            assert math.isfinite(kernel.decay_constant_estimate)
            assert kernel.decay_constant_estimate > 0.0

    def test_pole_in_lower_half_plane(self) -> None:
        """Test that a pole with Im(a) <= 0 is rejected."""
        with pytest.raises(PoleInLowerHalfPlane):
            build_kernel([1j, 0.5 - 0.1j])
        with pytest.raises(PoleInLowerHalfPlane):
            build_kernel([2.0])

    def test_duplicate_poles(self) -> None:
        """Test that repeated poles are rejected."""
        with pytest.raises(DuplicatePoles):
            build_kernel([1j, 1j])

    def test_no_poles(self) -> None:
        """Test that an empty pole list is rejected."""
        with pytest.raises(KernelConstructionError):
            build_kernel([])
        with pytest.raises(KernelConstructionError):
            equispaced_poles(0)

    def test_errors_are_value_errors(self) -> None:
        """Test that input errors can be caught as ValueError."""
        with pytest.raises(ValueError):
            build_kernel([-1j])


class TestKernelEvaluation:
    """Tests for eval_kernel and eval_scaled."""

    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6])
    def test_real_and_symmetric(self, m: int, rng: np.random.Generator) -> None:
        """Test that symmetric poles give an even kernel."""
        kernel = equispaced_kernel(m)
        x = rng.uniform(-100.0, 100.0, 1000)
        values = eval_kernel(kernel, x)
        assert values.dtype == float
        np.testing.assert_allclose(values, eval_kernel(kernel, -x), rtol=1e-13, atol=1e-13)

    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6])
    def test_matches_partial_fraction_sum(self, m: int, rng: np.random.Generator) -> None:
        """Test eval_kernel against the real part of the partial-fraction sum."""
        kernel = equispaced_kernel(m)
        x = rng.uniform(-100.0, 100.0, 1000)
        a, alpha = kernel.poles, kernel.residues
        shifted = x[:, None] - a[None, :]
        direct = (alpha / shifted - alpha.conj() / shifted.conj()).sum(axis=1) / (2j * np.pi)
        assert np.abs(direct.imag).max() < 1e-13
        np.testing.assert_allclose(eval_kernel(kernel, x), direct.real, rtol=1e-13, atol=1e-13)

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_far_field_matches_partial_fractions(self, m: int) -> None:
        """Test that both evaluation branches agree past the switch radius."""
        kernel = equispaced_kernel(m)
        x = kernel.far_field_radius * np.array([1.5, 2.0, -1.5, -3.0])
        np.testing.assert_allclose(_far_field(kernel, x), _near_field(kernel, x), rtol=1e-7)

    def test_continuity_at_switch(self) -> None:
        """Test that values just inside and outside the switch radius agree."""
        kernel = equispaced_kernel(3)
        r = kernel.far_field_radius
        inside, outside = eval_kernel(kernel, np.array([r * (1 - 1e-12), r]))
        assert inside == pytest.approx(outside, rel=1e-8)

    def test_scalar_input(self) -> None:
        """Test that scalar input returns a float."""
        value = eval_kernel(equispaced_kernel(1), 0.0)
        assert isinstance(value, float)
        assert value == pytest.approx(1.0 / math.pi, rel=1e-15)

    def test_scaled_kernel(self) -> None:
        """Test K_eps(x) = K(x / eps) / eps."""
        kernel = equispaced_kernel(2)
        x = np.linspace(-0.1, 0.1, 11)
        np.testing.assert_allclose(eval_scaled(kernel, 0.01, x), eval_kernel(kernel, x / 0.01) / 0.01)

    @pytest.mark.parametrize("eps", [0.0, -0.1, math.inf])
    def test_scaled_rejects_bad_eps(self, eps: float) -> None:
        """Test that nonpositive or infinite eps raises NonpositiveEpsilon."""
        with pytest.raises(NonpositiveEpsilon):
            eval_scaled(equispaced_kernel(1), eps, 0.0)


class TestMomentChecks:
    """Tests for integrate_kernel and verify_moments."""

    @pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6])
    def test_verify_moments_pass(self, m: int) -> None:
        """Test that equispaced kernels pass the moment checks at 1e-7."""
        report = verify_moments(equispaced_kernel(m), tol=1e-7)
        assert report.passed, report.failures
        assert report.order == m
        assert len(report.moment_errors) == m - 1

    @pytest.mark.parametrize(("m", "exponent"), [(1, -2.0), (2, -4.0), (3, -4.0), (4, -6.0)])
    def test_decay_exponent(self, m: int, exponent: float) -> None:
        """Test tail decay: m + 1 for odd m, m + 2 for symmetric even m."""
        report = verify_moments(equispaced_kernel(m))
        assert report.decay_exponent_fit == pytest.approx(exponent, abs=0.05)

    def test_unnormalized_kernel_fails(self) -> None:
        """Test that a hand-built kernel with wrong residues is flagged."""
        kernel = RationalKernel(np.array([1j]), np.array([2.0 + 0j]))
        report = verify_moments(kernel)
        assert not report.passed
        assert report.normalization_error == pytest.approx(1.0, abs=1e-8)
        assert "normalization" in report.failures[0]

    @pytest.mark.parametrize("m", [1, 3, 6])
    def test_integrate_scaled_and_shifted(self, m: int) -> None:
        """Test that K_eps(x - s) integrates to one."""
        kernel = equispaced_kernel(m)
        assert integrate_kernel(kernel, eps=0.01, shift=0.3) == pytest.approx(1.0, abs=1e-8)
        assert integrate_kernel(kernel) == pytest.approx(1.0, abs=1e-8)

    def test_integrate_rejects_bad_eps(self) -> None:
        """Test that integrate_kernel validates eps."""
        with pytest.raises(NonpositiveEpsilon):
            integrate_kernel(equispaced_kernel(1), eps=0.0)
