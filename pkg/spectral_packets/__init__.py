"""Spectral packets - generalized eigenfunctions and spectral densities from resolvent solves."""

from spectral_packets.core.kernels import RationalKernel, build_kernel, equispaced_kernel
from spectral_packets.core.types import ErrorSweep, MomentReport, OperatorKind, SweepMode
from spectral_packets.core.wavepacket import WavePacket, assemble, smoothed_density

__version__ = "0.1.0"

__all__ = [
    "ErrorSweep",
    "MomentReport",
    "OperatorKind",
    "RationalKernel",
    "SweepMode",
    "WavePacket",
    "assemble",
    "build_kernel",
    "equispaced_kernel",
    "smoothed_density",
]
