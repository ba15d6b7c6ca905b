"""CLI entry point for spectral-packets.

Provides commands for kernel tables, wave packets, smoothed spectral
densities and convergence sweeps.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable
from typing import Any

from spectral_packets import __version__
from spectral_packets.cli.config import RunConfig, build_config, read_config_file
from spectral_packets.cli.runner import ComputationRunner, OutputTable, write_output
from spectral_packets.core.errors import SpectralError
from spectral_packets.core.types import CommandKind, OperatorKind, SweepMode

logger = logging.getLogger("spectral_packets")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    """Options shared by every subcommand; all values are validated by RunConfig."""
    parser.add_argument(
        "--config", "-c",
        type=str,
        default=None,
        help="Flat key=value config file (flags override its values)",
    )
    parser.add_argument(
        "--operator",
        choices=[kind.value for kind in OperatorKind],
        default=None,
        help="Operator (default: multiplication)",
    )
    parser.add_argument("--m", type=str, default=None, help="Kernel order(s), comma list (default: 1)")
    parser.add_argument("--poles", type=str, default=None, help="Explicit kernel poles, e.g. '-1+1j,1+1j'")
    parser.add_argument("--eps", type=str, default=None, help="Smoothing parameter(s), comma list (default: 0.01)")
    parser.add_argument(
        "--lambda",
        dest="lam",
        type=str,
        default=None,
        help="Spectral point(s): scalar, comma list or start:stop:num (default: 0.1)",
    )
    parser.add_argument("--f", type=str, default=None, help="Function id from the catalog")
    parser.add_argument("--phi", type=str, default=None, help="Test function id (weak convergence)")
    parser.add_argument("--potential", type=str, default=None, help="Potential id (default: short_range)")
    parser.add_argument("--L", type=str, default=None, help="Schrodinger half-width (default: 60)")
    parser.add_argument("--n", type=str, default=None, help="Grid size (default depends on the operator)")
    parser.add_argument("--kmax", type=str, default=None, help="Fourier cutoff (default: 8)")
    parser.add_argument("--nk", type=str, default=None, help="Fourier nodes (default: 4096)")
    parser.add_argument("--ny", type=str, default=None, help="Transverse modes for the strip (default: 20)")
    parser.add_argument(
        "--mode",
        choices=[mode.value for mode in SweepMode],
        default=None,
        help="Error norm for converge (default: weak)",
    )
    parser.add_argument("--window", type=str, default=None, help="Output or comparison window 'lo,hi'")
    parser.add_argument("--out", "-o", type=str, default=None, help="CSV output path (default: <command>.csv)")
    parser.add_argument("--workers", type=str, default=None, help="Threads for independent solves (default: 1)")
    parser.add_argument(
        "--no-symmetry",
        dest="exploit_symmetry",
        action="store_const",
        const=False,
        default=None,
        help="Use 2m resolvent solves even for real operators",
    )


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser for the CLI."""
    parser = argparse.ArgumentParser(
        prog="spectral-packets",
        description="Wave packets and smoothed spectral densities of self-adjoint operators from resolvent solves.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Tabulate the Poisson kernel and a fourth-order kernel
  spectral-packets kernel --m 1,4 --out kernels.csv

  # Wave packet of the cubic multiplication operator
  spectral-packets eigenfunction --operator multiplication --lambda 0.1 --eps 0.01 --m 1

  # Smoothed density of the rank-one perturbation on a lambda grid
  spectral-packets measure --operator rank_one --lambda=-0.5:0.5:201 --m 2 --eps 0.01

  # Weak convergence rates
  spectral-packets converge --lambda 0.1 --m 1,3,5 --eps 0.03,0.01,0.003,0.001 --phi cubic_phi

  # Use a config file, overriding one value
  spectral-packets converge --config sweep.conf --m 3
        """,
    )

    parser.add_argument("--quiet", "-q", action="store_true", help="Disable logging")
    parser.add_argument("--verbose", action="store_true", help="Log debug details")
    parser.add_argument(
        "--version", "-v",
        action="version",
        version=f"%(prog)s {__version__}",
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    kernel_parser = subparsers.add_parser(
        "kernel",
        help="Tabulate rational kernels",
        description="Sample K_m on a window and report poles, residues and moment errors.",
    )
    _add_run_options(kernel_parser)

    eigen_parser = subparsers.add_parser(
        "eigenfunction",
        help="Compute a wave packet",
        description="Assemble the wave packet at a single lambda, eps and kernel order.",
    )
    _add_run_options(eigen_parser)

    measure_parser = subparsers.add_parser(
        "measure",
        help="Compute smoothed spectral densities",
        description="Tabulate the smoothed spectral density over a lambda grid for each (m, eps).",
    )
    _add_run_options(measure_parser)

    converge_parser = subparsers.add_parser(
        "converge",
        help="Measure convergence rates",
        description="Sweep eps for each kernel order and fit log-log error slopes.",
    )
    _add_run_options(converge_parser)

    return parser


def configure_logging(args: argparse.Namespace) -> None:
    """Route library logs and numerical warnings to stderr."""
    if args.quiet:
        logging.disable(logging.CRITICAL)
        return
    logging.disable(logging.NOTSET)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    logger.setLevel(logging.DEBUG if args.verbose else logging.WARNING)


_FLAG_KEYS = (
    "operator",
    "m",
    "poles",
    "eps",
    "f",
    "phi",
    "potential",
    "L",
    "n",
    "kmax",
    "nk",
    "ny",
    "mode",
    "window",
    "out",
    "workers",
    "exploit_symmetry",
)


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file and flags into a RunConfig."""
    file_values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    if args.config:
        file_values, lines = read_config_file(args.config)
        if "command" in file_values:
            file_values.pop("command")
            lines.pop("command", None)
            logger.warning("ignoring 'command' in %s; the subcommand decides", args.config)

    flags: dict[str, Any] = {key: getattr(args, key, None) for key in _FLAG_KEYS}
    flags["lambda"] = args.lam
    flags["command"] = args.command
    return build_config(file_values, flags, lines)


def _execute(args: argparse.Namespace, summarize: Callable[[OutputTable], None]) -> int:
    """Run the selected command, write its output and report the outcome."""
    try:
        config = load_config(args)
        table = ComputationRunner(config).run()
        output = write_output(table, config)
    except SpectralError as exc:
        print(f"✗ {exc}", file=sys.stderr)
        return exc.exit_code

    print(f"✓ {config.command.value}: wrote {output.rows} rows to {output.csv_path}")
    print(f"  Metadata: {output.metadata_path}")
    summarize(table)
    return 0


def cmd_kernel(args: argparse.Namespace) -> int:
    """Handle the kernel command."""

    def summarize(table: OutputTable) -> None:
        for entry in table.metadata["kernels"]:
            report = entry["moment_report"]
            worst = max([report["normalization_error"], *report["moment_errors"]])
            status = "ok" if not report["failures"] else "FAILED"
            print(f"  m={entry['order']}: moments {status} (max error {worst:.2e})")

    return _execute(args, summarize)


def cmd_eigenfunction(args: argparse.Namespace) -> int:
    """Handle the eigenfunction command."""

    def summarize(table: OutputTable) -> None:
        meta = table.metadata
        print(f"  Resolvent solves: {meta['solves']}, multiplicity at lambda: {meta['multiplicity']}")
        fractions = meta.get("mode_energy_fractions")
        if fractions:
            leading = sorted(enumerate(fractions, start=1), key=lambda item: -item[1])[:3]
            print("  Mode energy: " + ", ".join(f"n={n}: {share:.4f}" for n, share in leading))

    return _execute(args, summarize)


def cmd_measure(args: argparse.Namespace) -> int:
    """Handle the measure command."""

    def summarize(table: OutputTable) -> None:
        meta = table.metadata
        print(f"  ||f||^2 = {meta['f_norm_squared']:.6g}")
        for name, mass in meta["trapezoid_mass"].items():
            print(f"  {name}: mass {mass:.6g}")

    return _execute(args, summarize)


def cmd_converge(args: argparse.Namespace) -> int:
    """Handle the converge command."""

    def summarize(table: OutputTable) -> None:
        for order, slope in table.metadata["slopes"].items():
            shown = "n/a" if slope is None else f"{slope:.3f}"
            print(f"  m={order}: slope {shown}")

    return _execute(args, summarize)


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    args = parser.parse_args(argv)

    # If no command specified, print help
    if args.command is None:
        parser.print_help()
        return 0

    configure_logging(args)

    # Dispatch to command handler
    if args.command == CommandKind.KERNEL.value:
        return cmd_kernel(args)
    elif args.command == CommandKind.EIGENFUNCTION.value:
        return cmd_eigenfunction(args)
    elif args.command == CommandKind.MEASURE.value:
        return cmd_measure(args)
    elif args.command == CommandKind.CONVERGE.value:
        return cmd_converge(args)
    else:
        parser.print_help()
        return 1


if __name__ == "__main__":
    sys.exit(main())
