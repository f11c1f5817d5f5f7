"""Run configuration: flat ``section.key=value`` text files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .errors import ConfigError

# config key -> attribute name; the order here is the order of ``dumps``
KEYS = {
    "family.alpha": "alpha",
    "family.a": "a",
    "numeric.precision_bits": "precision_bits",
    "horizons.orbit": "orbit_horizon",
    "horizons.entry": "entry_horizon",
    "horizons.niceness": "niceness_horizon",
    "enumeration.max_time": "max_time",
    "enumeration.min_width": "min_width",
    "thresholds.rho": "rho",
    "thresholds.delta_min": "delta_min",
    "thresholds.coverage_min": "coverage_min",
    "thresholds.wmp_success_min": "wmp_success_min",
    "anchors.depth": "anchor_depth",
    "anchors.base_depth": "base_depth",
    "anchors.node_budget": "node_budget",
    "anchors.trusted_only": "trusted_only",
    "geometry.samples": "geometry_samples",
    "geometry.grid": "grid",
    "wmp.samples": "wmp_samples",
    "density.samples_per_window": "density_samples",
    "density.ref_lo": "density_ref_lo",
    "density.ref_hi": "density_ref_hi",
    "density.horizon": "density_horizon",
    "report.digits": "digits",
    "run.seed": "seed",
    "run.workers": "workers",
    "output.dir": "output_dir",
}
ATTRS = {v: k for k, v in KEYS.items()}


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a pipeline run.  Reals are kept as decimal strings."""

    alpha: str = "2"
    a: str = "0.975"
    precision_bits: int = 256
    orbit_horizon: int = 10_000
    entry_horizon: int = 1000
    niceness_horizon: int = 1000
    max_time: int = 1000
    min_width: str = "1e-8"
    rho: str = "0.1"
    delta_min: str = "0.001"
    coverage_min: str = "0.99"
    wmp_success_min: str = "0.25"
    anchor_depth: int = 32
    base_depth: int = 8
    node_budget: int = 20_000
    trusted_only: bool = True
    geometry_samples: int = 50
    grid: int = 8
    wmp_samples: int = 500
    density_samples: int = 10_000
    density_ref_lo: str = "0.6"
    density_ref_hi: str = "0.62"
    density_horizon: int = 800
    digits: int = 40
    seed: int = 20_240_501
    workers: int = 1
    output_dir: str = "lab-out"

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _coerce(f, getattr(self, f.name)))
        for name in ("rho", "delta_min", "coverage_min", "wmp_success_min", "min_width"):
            if not Decimal(getattr(self, name)) > 0:
                raise ConfigError(f"{ATTRS[name]} must be positive")
        if Decimal(self.coverage_min) > 1 or Decimal(self.wmp_success_min) > 1:
            raise ConfigError("coverage and success thresholds are fractions in (0, 1]")
        if not Decimal(self.alpha) >= 2:
            raise ConfigError("family.alpha must be at least 2")
        if not 0 < Decimal(self.a) <= 1:
            raise ConfigError("family.a must lie in (0, 1]")
        if not 0 <= Decimal(self.density_ref_lo) < Decimal(self.density_ref_hi) <= 1:
            raise ConfigError("density reference window must satisfy 0 <= lo < hi <= 1")
        if self.precision_bits < 64:
            raise ConfigError("numeric.precision_bits must be at least 64")
        for name in ("orbit_horizon", "entry_horizon", "niceness_horizon", "max_time",
                     "anchor_depth", "base_depth", "node_budget", "geometry_samples",
                     "wmp_samples", "density_samples", "density_horizon", "digits", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{ATTRS[name]} must be a positive integer")
        if self.grid < 2:
            raise ConfigError("geometry.grid must be at least 2")
        if self.digits < 2:
            raise ConfigError("report.digits must be at least 2")
        if self.seed < 0:
            raise ConfigError("run.seed must be non-negative")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Apply ``{"section.key": value}`` overrides."""
        changes = {}
        for key, value in overrides.items():
            if key not in KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            changes[KEYS[key]] = value
        return self.replace(**changes)

    def items(self):
        for key, attr in KEYS.items():
            yield key, getattr(self, attr)


def _coerce(f, value):
    try:
        if f.type == "bool":
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("true", "1", "yes"):
                return True
            if text in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if f.type == "int":
            if isinstance(value, bool):
                raise ValueError(value)
            return int(str(value).strip())
        if f.name == "output_dir":
            return str(value)
        text = str(value).strip()
        if not Decimal(text).is_finite():
            raise ValueError(value)
        return text
    except (ValueError, InvalidOperation):
        raise ConfigError(f"bad value for {ATTRS[f.name]}: {value!r}") from None


def parses(text: str) -> RunConfig:
    """Parse ``key=value`` lines; ``#`` starts a comment, unknown keys are errors."""
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in overrides:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        overrides[key] = value
    return RunConfig().with_overrides(overrides)


def dumps(cfg: RunConfig) -> str:
    out = []
    for key, value in cfg.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        out.append(f"{key}={value}")
    return "\n".join(out) + "\n"


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return parses(text)


def save(cfg: RunConfig, path) -> None:
    Path(path).write_text(dumps(cfg), encoding="utf-8")
