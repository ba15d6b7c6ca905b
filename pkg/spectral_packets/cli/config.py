"""Run configuration: flat key=value files, CLI flags and their validation.

Values in config files are typed with ``yaml.safe_load`` one line at a time,
so ``eps=0.01`` is a float, ``m=[1, 3, 5]`` a list and ``window=-10,10`` a
string that the comma-list validators split. Flags override file values,
which override the defaults.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from spectral_packets.core.catalog import FUNCTIONS, POTENTIALS, STRIP_FUNCTIONS
from spectral_packets.core.errors import ConfigError
from spectral_packets.core.types import CommandKind, OperatorKind, SweepMode

logger = logging.getLogger(__name__)

CUBIC_OPERATORS = (OperatorKind.MULTIPLICATION, OperatorKind.RANK_ONE)

DEFAULT_FUNCTION = {
    OperatorKind.MULTIPLICATION: "cubic_f",
    OperatorKind.RANK_ONE: "cubic_f",
    OperatorKind.FREE_LAPLACIAN: "gaussian",
    OperatorKind.SCHRODINGER: "gaussian",
    OperatorKind.STRIP: "strip_two_mode",
}

DEFAULT_GRID_SIZE = {
    OperatorKind.MULTIPLICATION: 2000,
    OperatorKind.RANK_ONE: 2000,
    OperatorKind.FREE_LAPLACIAN: 1601,
    OperatorKind.SCHRODINGER: 6000,
    OperatorKind.STRIP: 1601,
}


def _split(value: Any) -> Any:
    """Turn '1, 2, 3' into ['1', '2', '3']; scalars become one-element lists."""
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return [value]
    return value


def _parse_range(value: str) -> list[float]:
    parts = value.split(":")
    if len(parts) != 3:
        raise ValueError(f"range must be start:stop:num, got '{value}'")
    start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
    if num < 1:
        raise ValueError(f"range needs at least one point, got {num}")
    return [float(v) for v in np.linspace(start, stop, num)]


def _parse_complex(value: Any) -> complex:
    if isinstance(value, (int, float, complex)):
        return complex(value)
    text = str(value).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(text)
    except ValueError:
        raise ValueError(f"'{value}' is not a complex number") from None


class RunConfig(BaseModel):
    """Validated configuration of one CLI run."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    command: CommandKind
    operator: OperatorKind = OperatorKind.MULTIPLICATION
    m: list[int] = Field(default_factory=lambda: [1])
    poles: list[complex] | None = None
    eps: list[float] = Field(default_factory=lambda: [0.01])
    lam: list[float] = Field(default_factory=lambda: [0.1], alias="lambda")
    f: str | None = None
    phi: str | None = None
    potential: str = "short_range"
    L: float = 60.0
    n: int | None = None
    kmax: float = 8.0
    nk: int = 4096
    ny: int = 20
    mode: SweepMode = SweepMode.WEAK
    window: tuple[float, float] | None = None
    samples: int = 801
    noise_floor: float = 0.0
    out: str | None = None
    workers: int = 1
    exploit_symmetry: bool = True

    @field_validator("m", "eps", "window", mode="before")
    @classmethod
    def _split_lists(cls, value: Any) -> Any:
        return _split(value)

    @field_validator("lam", mode="before")
    @classmethod
    def _split_lambda(cls, value: Any) -> Any:
        if isinstance(value, str) and ":" in value:
            return _parse_range(value)
        return _split(value)

    @field_validator("poles", mode="before")
    @classmethod
    def _split_poles(cls, value: Any) -> Any:
        if value is None:
            return None
        return [_parse_complex(v) for v in _split(value)]

    @field_validator("m")
    @classmethod
    def _positive_orders(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("at least one kernel order is required")
        for m in value:
            if m < 1:
                raise ValueError(f"kernel order must be at least 1, got {m}")
        return value

    @field_validator("eps")
    @classmethod
    def _positive_eps(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("at least one eps value is required")
        for eps in value:
            if not eps > 0.0:
                raise ValueError(f"eps must be positive, got {eps}")
        return value

    @field_validator("lam")
    @classmethod
    def _nonempty_lambda(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("at least one lambda value is required")
        return value

    @field_validator("poles")
    @classmethod
    def _upper_half_plane(cls, value: list[complex] | None) -> list[complex] | None:
        if value is not None:
            if not value:
                raise ValueError("at least one pole is required")
            for a in value:
                if not a.imag > 0.0:
                    raise ValueError(f"pole {a} is not in the upper half-plane")
        return value

    @field_validator("L", "kmax")
    @classmethod
    def _positive_float(cls, value: float) -> float:
        if not value > 0.0:
            raise ValueError(f"must be positive, got {value}")
        return value

    @field_validator("n", "nk", "ny", "samples", "workers")
    @classmethod
    def _positive_int(cls, value: int | None) -> int | None:
        if value is not None and value < 1:
            raise ValueError(f"must be at least 1, got {value}")
        return value

    @field_validator("window")
    @classmethod
    def _ordered_window(cls, value: tuple[float, float] | None) -> tuple[float, float] | None:
        if value is not None and not value[0] < value[1]:
            raise ValueError(f"window must satisfy lo < hi, got {value}")
        return value

    @model_validator(mode="after")
    def _operator_defaults(self) -> RunConfig:
        if self.f is None:
            self.f = DEFAULT_FUNCTION[self.operator]
        if self.n is None:
            self.n = DEFAULT_GRID_SIZE[self.operator]
        if self.poles is not None:
            self.m = [len(self.poles)]
        return self

    @property
    def is_cubic(self) -> bool:
        return self.operator in CUBIC_OPERATORS

    def check_catalog(self, lines: dict[str, int] | None = None) -> None:
        """
        Check that function and potential ids exist for the chosen operator.

        Raises:
            ConfigError: For unknown or mismatched ids
        """
        lines = lines or {}
        catalog = STRIP_FUNCTIONS if self.operator is OperatorKind.STRIP else FUNCTIONS
        for name in ("f", "phi"):
            value = getattr(self, name)
            if value is not None and value not in catalog:
                raise ConfigError(
                    f"unknown function id '{value}' for the {self.operator.value} operator "
                    f"(choose from {', '.join(sorted(catalog))})",
                    field=name,
                    line=lines.get(name),
                )
        if self.operator is OperatorKind.SCHRODINGER and self.potential not in POTENTIALS:
            raise ConfigError(
                f"unknown potential id '{self.potential}' (choose from {', '.join(sorted(POTENTIALS))})",
                field="potential",
                line=lines.get("potential"),
            )

    def echo(self) -> dict[str, Any]:
        """JSON-ready copy of the configuration, sufficient to reproduce the run."""
        data = self.model_dump(mode="json", by_alias=True)
        if self.poles is not None:
            data["poles"] = [[a.real, a.imag] for a in self.poles]
        return data


def read_config_file(path: str | Path) -> tuple[dict[str, Any], dict[str, int]]:
    """
    Read a flat key=value config file.

    Blank lines and text after '#' are ignored. Dashes in keys become
    underscores.

    Args:
        path: Path to the config file

    Returns:
        Tuple of (values by key, 1-based line number by key)

    Raises:
        ConfigError: On unreadable files, malformed lines or duplicate keys
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got '{line}'", line=number)
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not key:
            raise ConfigError("missing key before '='", line=number)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", field=key, line=number)
        try:
            parsed = yaml.safe_load(value.strip())
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse value '{value.strip()}': {exc}", field=key, line=number) from None
        if parsed is None:
            raise ConfigError("missing value", field=key, line=number)
        values[key] = parsed
        lines[key] = number
    logger.debug("read %d keys from %s", len(values), path)
    return values, lines


def build_config(
    file_values: dict[str, Any] | None = None,
    flag_values: dict[str, Any] | None = None,
    lines: dict[str, int] | None = None,
) -> RunConfig:
    """
    Merge file values and flags (flags win) into a validated RunConfig.

    Args:
        file_values: Values read from a config file
        flag_values: Values from CLI flags; None entries are ignored
        lines: Line numbers of the file values, for error messages

    Returns:
        RunConfig with operator defaults filled in

    Raises:
        ConfigError: With the offending field and, for file values, its line
    """
    file_values = file_values or {}
    flags = {k: v for k, v in (flag_values or {}).items() if v is not None}
    lines = lines or {}
    merged = {**file_values, **flags}

    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as exc:
        error = exc.errors()[0]
        loc = error.get("loc", ())
        field = str(loc[0]) if loc else None
        line = lines.get(field) if field is not None and field not in flags else None
        message = error.get("msg", "invalid value")
        raise ConfigError(message, field=field, line=line) from None

    config.check_catalog({k: v for k, v in lines.items() if k not in flags})
    return config
