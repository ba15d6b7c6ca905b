"""Command execution and output writing.

``ComputationRunner`` turns a RunConfig into an ``OutputTable``: a
rectangular block of floats plus JSON-ready metadata. ``write_output``
stores the table as CSV with 17 significant digits and the metadata in a
``<out>.json`` sidecar next to it.
"""

from __future__ import annotations

import io
import json
import logging
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import scipy
from scipy.integrate import trapezoid

from spectral_packets.cli.config import RunConfig
from spectral_packets.core.catalog import get_function, get_potential, get_strip_function
from spectral_packets.core.errors import ConfigError, NoReferenceAvailable, NumericalFailure
from spectral_packets.core.functions import GridFunction, StripGridFunction
from spectral_packets.core.kernels import RationalKernel, build_kernel, equispaced_kernel, eval_kernel, verify_moments
from spectral_packets.core.measures import reference_density
from spectral_packets.core.numerics import cubic_roots_in_interval
from spectral_packets.core.operators import (
    ResolventOracle,
    free_laplacian_resolvent,
    multiplication_resolvent,
    rank_one_perturbed_resolvent,
    schrodinger_resolvent,
    strip_laplacian_resolvent,
)
from spectral_packets.core.types import CommandKind, OperatorKind, SweepMode
from spectral_packets.core.wavepacket import assemble, error_sweep, smoothed_density

logger = logging.getLogger(__name__)

CSV_FORMAT = "%.17g"
KERNEL_WINDOW = (-10.0, 10.0)
SUP_WINDOW = (-10.0, 10.0)
LINE_WINDOW = (-20.0, 20.0)
RESOLUTION_FACTOR = 8.0


def _complex_pairs(values: Any) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in np.atleast_1d(np.asarray(values, dtype=complex))]


@dataclass
class OutputTable:
    """Named float columns plus metadata for the JSON sidecar."""

    columns: list[str]
    rows: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_columns(cls, data: dict[str, Any], metadata: dict[str, Any] | None = None) -> OutputTable:
        names = list(data)
        arrays = [np.asarray(data[name], dtype=float).ravel() for name in names]
        lengths = {a.size for a in arrays}
        if len(lengths) > 1:
            raise NumericalFailure(f"columns have different lengths: {sorted(lengths)}")
        rows = np.column_stack(arrays) if arrays else np.empty((0, 0))
        return cls(columns=names, rows=rows, metadata=metadata or {})

    def validate(self) -> None:
        """
        Check the table is rectangular and finite.

        Raises:
            NumericalFailure: On a shape mismatch or any NaN/Inf entry
        """
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.columns):
            raise NumericalFailure(f"table of shape {rows.shape} does not match {len(self.columns)} columns")
        bad = ~np.isfinite(rows)
        if np.any(bad):
            row, col = np.argwhere(bad)[0]
            raise NumericalFailure(f"non-finite value in column '{self.columns[col]}', row {row + 1}")

    def to_csv(self) -> str:
        """CSV text with a header line and 17 significant digits per cell."""
        self.validate()
        buffer = io.StringIO()
        np.savetxt(buffer, self.rows, fmt=CSV_FORMAT, delimiter=",", header=",".join(self.columns), comments="")
        return buffer.getvalue()


@dataclass
class RunOutput:
    """Paths written by ``write_output``."""

    csv_path: Path
    metadata_path: Path
    rows: int


def _versions() -> dict[str, str]:
    from spectral_packets import __version__

    return {
        "spectral_packets": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def write_output(table: OutputTable, config: RunConfig, path: str | Path | None = None) -> RunOutput:
    """
    Write ``table`` as CSV and its metadata as a JSON sidecar.

    Args:
        table: Validated output table
        config: Configuration echoed into the sidecar
        path: CSV path; defaults to ``config.out`` or ``<command>.csv``

    Returns:
        RunOutput with both paths
    """
    csv_path = Path(path or config.out or f"{config.command.value}.csv")
    csv_text = table.to_csv()
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(csv_text, encoding="utf-8")

    metadata = {
        "command": config.command.value,
        "config": config.echo(),
        "versions": _versions(),
        "created_at": datetime.now(timezone.utc).isoformat(),
        "columns": table.columns,
        **table.metadata,
    }
    metadata_path = csv_path.with_name(csv_path.name + ".json")
    metadata_path.write_text(json.dumps(metadata, indent=2, ensure_ascii=False), encoding="utf-8")
    logger.info("wrote %d rows to %s", table.rows.shape[0], csv_path)
    return RunOutput(csv_path=csv_path, metadata_path=metadata_path, rows=int(table.rows.shape[0]))


class ComputationRunner:
    """Runs one CLI command for a validated configuration."""

    def __init__(self, config: RunConfig):
        self.config = config

    def run(self) -> OutputTable:
        """Dispatch on ``config.command``."""
        command = self.config.command
        if command is CommandKind.KERNEL:
            table = self.run_kernel()
        elif command is CommandKind.EIGENFUNCTION:
            table = self.run_eigenfunction()
        elif command is CommandKind.MEASURE:
            table = self.run_measure()
        else:
            table = self.run_converge()
        table.validate()
        return table

    # Setup

    def kernels(self) -> list[RationalKernel]:
        if self.config.poles is not None:
            return [build_kernel(self.config.poles)]
        return [equispaced_kernel(m) for m in self.config.m]

    def function(self, name: str | None) -> Any:
        if name is None:
            return None
        if self.config.operator is OperatorKind.STRIP:
            return get_strip_function(name)
        return get_function(name)

    def build_oracle(self, focus: tuple[float, ...] = ()) -> ResolventOracle:
        """
        Construct the configured operator.

        Cubic operators are graded toward the preimages of ``focus`` with a
        panel width of eps_min / 8.
        """
        config = self.config
        n = int(config.n or 0)
        operator = config.operator
        if operator in (OperatorKind.MULTIPLICATION, OperatorKind.RANK_ONE):
            resolution = min(config.eps) / RESOLUTION_FACTOR
            factory = multiplication_resolvent if operator is OperatorKind.MULTIPLICATION else rank_one_perturbed_resolvent
            return factory(n, focus=focus, resolution=resolution)
        if operator is OperatorKind.FREE_LAPLACIAN:
            return free_laplacian_resolvent(config.kmax, config.nk, x_window=LINE_WINDOW, n_x=n)
        if operator is OperatorKind.SCHRODINGER:
            return schrodinger_resolvent(get_potential(config.potential), config.L, n)
        return strip_laplacian_resolvent(config.kmax, config.nk, config.ny, x_window=LINE_WINDOW, n_x=n)

    def _single(self, name: str, values: list[Any]) -> Any:
        if len(values) != 1:
            raise ConfigError(f"{self.config.command.value} needs a single value, got {len(values)}", field=name)
        return values[0]

    # Commands

    def run_kernel(self) -> OutputTable:
        """Kernel samples on the window plus poles, residues and moment checks."""
        lo, hi = self.config.window or KERNEL_WINDOW
        x = np.linspace(lo, hi, self.config.samples)
        columns: dict[str, Any] = {"x": x}
        reports = []
        for kernel in self.kernels():
            columns[f"K_m{kernel.order}"] = eval_kernel(kernel, x)
            report = verify_moments(kernel)
            if not report.passed:
                logger.warning("kernel of order %d: %s", kernel.order, "; ".join(report.failures))
            reports.append(
                {
                    "order": kernel.order,
                    "poles": _complex_pairs(kernel.poles),
                    "residues": _complex_pairs(kernel.residues),
                    "moment_report": report.model_dump(),
                    "decay_constant": kernel.decay_constant_estimate,
                }
            )
        return OutputTable.from_columns(columns, {"kernels": reports})

    def run_eigenfunction(self) -> OutputTable:
        """Packet values on the operator grid, with reference columns when available."""
        config = self.config
        lam = float(self._single("lambda", config.lam))
        eps = float(self._single("eps", config.eps))
        kernel = self._single("m", self.kernels())
        oracle = self.build_oracle(focus=(lam,))
        f = oracle.sample(self.function(config.f))
        packet = assemble(
            oracle, kernel, eps, lam, f, exploit_symmetry=config.exploit_symmetry, workers=config.workers
        )
        metadata: dict[str, Any] = {
            "lambda": lam,
            "eps": eps,
            "order": kernel.order,
            "solves": packet.solves,
            "imaginary_ratio": packet.imaginary_ratio(),
            "multiplicity": oracle.multiplicity(lam),
        }

        values = packet.values
        if isinstance(values, StripGridFunction):
            energy = values.mode_energy()
            total = float(energy.sum())
            metadata["mode_energy_fractions"] = (energy / total).tolist() if total > 0.0 else energy.tolist()
            mask = self._window_mask(values.nodes)
            columns: dict[str, Any] = {"x": values.nodes[mask]}
            for n in range(1, values.n_modes + 1):
                columns[f"re_u_n{n}"] = values.coefficients[n - 1][mask].real
                columns[f"im_u_n{n}"] = values.coefficients[n - 1][mask].imag
            return OutputTable.from_columns(columns, metadata)

        assert isinstance(values, GridFunction)
        mask = self._window_mask(values.nodes)
        x = values.nodes[mask]
        u = values.values[mask]
        columns = {"x": x, "re_u": u.real, "im_u": u.imag, "abs_u": np.abs(u)}
        try:
            reference = oracle.reference_eigenfunction(lam, f)
        except NoReferenceAvailable as exc:
            logger.info("%s", exc)
        else:
            expected = reference(x)
            columns["re_ref"] = expected.real
            columns["im_ref"] = expected.imag
        if config.is_cubic:
            metadata["cubic_roots"] = [r.value for r in cubic_roots_in_interval(lam)]
        return OutputTable.from_columns(columns, metadata)

    def _window_mask(self, nodes: np.ndarray) -> np.ndarray:
        if self.config.window is None:
            return np.ones(nodes.shape, dtype=bool)
        lo, hi = self.config.window
        mask = (nodes >= lo) & (nodes <= hi)
        if not np.any(mask):
            raise ConfigError(f"no grid nodes inside window [{lo:g}, {hi:g}]", field="window")
        return mask

    def run_measure(self) -> OutputTable:
        """Smoothed densities over the lambda grid, one column per (m, eps)."""
        config = self.config
        lams = np.asarray(config.lam, dtype=float)
        oracle = self.build_oracle()
        func = self.function(config.f)
        f = oracle.sample(func)
        columns: dict[str, Any] = {"lambda": lams}
        masses: dict[str, float] = {}
        for kernel in self.kernels():
            for eps in config.eps:
                name = f"rho_m{kernel.order}_eps{eps:g}"
                column = np.array(
                    [
                        smoothed_density(
                            oracle,
                            kernel,
                            eps,
                            lam,
                            f,
                            exploit_symmetry=config.exploit_symmetry,
                            workers=config.workers,
                        )
                        for lam in lams
                    ]
                )
                columns[name] = column
                masses[name] = float(trapezoid(column, lams)) if lams.size > 1 else 0.0
        try:
            density = reference_density(oracle, func)
        except NoReferenceAvailable as exc:
            logger.info("%s", exc)
        else:
            if all(density.is_regular(lam) for lam in lams):
                columns["rho_ref"] = [density(lam) for lam in lams]
            else:
                logger.info("reference density omitted: the lambda grid hits a singular point")
        metadata = {"f_norm_squared": f.norm() ** 2, "trapezoid_mass": masses}
        return OutputTable.from_columns(columns, metadata)

    def run_converge(self) -> OutputTable:
        """(m, eps, error) rows of an error sweep, slopes in the metadata."""
        config = self.config
        if config.mode is SweepMode.WEAK and config.phi is None:
            raise ConfigError("weak convergence needs a test function", field="phi")
        lam = float(self._single("lambda", config.lam))
        oracle = self.build_oracle(focus=(lam,))
        sweeps = error_sweep(
            oracle,
            self.function(config.f),
            lam=lam,
            orders=config.m,
            eps_values=config.eps,
            mode=config.mode,
            phi=self.function(config.phi),
            window=config.window or SUP_WINDOW,
            pole_placement=(lambda m: config.poles) if config.poles is not None else None,
            noise_floor=config.noise_floor,
            workers=config.workers,
            exploit_symmetry=config.exploit_symmetry,
        )
        orders, eps_column, errors = [], [], []
        for sweep in sweeps:
            for point in sweep.points:
                orders.append(sweep.order)
                eps_column.append(point.eps)
                errors.append(point.error)
        metadata = {
            "lambda": lam,
            "mode": config.mode.value,
            "slopes": {str(sweep.order): sweep.slope for sweep in sweeps},
            "fitted": {str(sweep.order): [p.fitted for p in sweep.points] for sweep in sweeps},
        }
        return OutputTable.from_columns({"m": orders, "eps": eps_column, "error": errors}, metadata)
