"""Core modules for spectral-packets.

Primary modules:
- kernels: Rational kernels of order m (construction, evaluation, moment checks)
- operators: Resolvent oracles for the gallery operators
- wavepacket: Wave-packet assembly, smoothed densities and error sweeps
- measures: Closed-form spectral densities and the convolution oracle
- types: Report models (MomentReport, ErrorSweep, etc.)
"""

from spectral_packets.core.functions import (
    GridFunction,
    ReferenceEigenfunction,
    StripGridFunction,
)
from spectral_packets.core.kernels import (
    RationalKernel,
    build_kernel,
    equispaced_kernel,
    equispaced_poles,
    eval_kernel,
    eval_scaled,
    integrate_kernel,
    verify_moments,
)
from spectral_packets.core.measures import (
    DensityFunction,
    reference_density,
    rho_free_laplacian,
    rho_multiplication,
    rho_strip,
    smoothed_density_oracle,
)
from spectral_packets.core.operators import (
    ResolventOracle,
    free_laplacian_resolvent,
    multiplication_resolvent,
    rank_one_perturbed_resolvent,
    schrodinger_resolvent,
    strip_laplacian_resolvent,
)
from spectral_packets.core.types import (
    ErrorSweep,
    MomentReport,
    OperatorKind,
    SweepMode,
    SweepPoint,
)
from spectral_packets.core.wavepacket import (
    WavePacket,
    assemble,
    error_sweep,
    smoothed_density,
    spectral_pairing,
    sup_error,
    total_mass,
    weak_pairing,
)

__all__ = [
    # Types
    "DensityFunction",
    "ErrorSweep",
    "GridFunction",
    "MomentReport",
    "OperatorKind",
    "RationalKernel",
    "ReferenceEigenfunction",
    "ResolventOracle",
    "StripGridFunction",
    "SweepMode",
    "SweepPoint",
    "WavePacket",
    # Kernels
    "build_kernel",
    "equispaced_kernel",
    "equispaced_poles",
    "eval_kernel",
    "eval_scaled",
    "integrate_kernel",
    "verify_moments",
    # Operators
    "free_laplacian_resolvent",
    "multiplication_resolvent",
    "rank_one_perturbed_resolvent",
    "schrodinger_resolvent",
    "strip_laplacian_resolvent",
    # Measures
    "reference_density",
    "rho_free_laplacian",
    "rho_multiplication",
    "rho_strip",
    "smoothed_density_oracle",
    # Wave packets
    "assemble",
    "error_sweep",
    "smoothed_density",
    "spectral_pairing",
    "sup_error",
    "total_mass",
    "weak_pairing",
]
