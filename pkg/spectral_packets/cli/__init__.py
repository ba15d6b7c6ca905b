"""CLI module for spectral-packets.

Provides the command-line interface for kernel tables, wave packets,
smoothed spectral densities and convergence sweeps.
"""

from spectral_packets.cli.config import RunConfig, build_config, read_config_file
from spectral_packets.cli.runner import ComputationRunner, OutputTable, write_output

__all__ = [
    "ComputationRunner",
    "OutputTable",
    "RunConfig",
    "build_config",
    "read_config_file",
    "write_output",
]
