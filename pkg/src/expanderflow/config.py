"""Run configuration: flat INI-style key/value sections mirroring the
module layout, with per-dimension defaults and `--set section.key=value`
overrides.

The effective configuration (defaults plus overrides) is itself an output
artifact: `print-config` dumps it, and every solve echoes it next to its
results so a run is reproducible from its output directory alone.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace

from .errors import ConfigError

GRID_DEFAULTS = {2: (257, 8.0), 3: (97, 6.0)}


@dataclass
class RunConfig:
    # run
    dimension: int = 2
    alpha: float = 0.05
    seed: int = 1729
    threads: int = 0
    # grid
    points_per_axis: int = 257
    half_width: float = 8.0
    # manifold
    tube_radius: float = 0.5
    cutoff_inner: float = 0.25
    cutoff_outer: float = 0.5
    # iteration
    delta: float = 0.2
    max_iter: int = 40
    tol_fix: float = 1e-7
    t_min: float = 1e-3
    t_ratio: float = math.sqrt(2.0)
    t_max: float = 16.0
    quad_panels: int = 48
    mode: str = "similarity_frame"
    # heat
    truncation: float = 8.0
    # oracle
    rho_max: float = 30.0
    tol_shoot: float = 1e-10
    # verify
    pde_residual_max: float = 5e-3
    dist_max: float = 1e-3
    defect2_max: float = 1e-3
    defect4_max: float = 2e-3
    lei_slack: float = 0.05
    holder_pairs: int = 2048
    defect_samples: int = 1024
    # report
    report_times: tuple = (1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e3)

    def validate(self) -> "RunConfig":
        if self.dimension not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.points_per_axis % 2 == 0 or self.points_per_axis < 5:
            raise ConfigError("grid.points_per_axis must be odd and >= 5")
        if self.half_width <= 0:
            raise ConfigError("grid.half_width must be positive")
        if not 0.0 < self.tube_radius < 1.0:
            raise ConfigError("manifold.tube_radius must lie in (0, 1)")
        if not 0.0 < self.cutoff_inner < self.cutoff_outer <= self.tube_radius:
            raise ConfigError("need 0 < cutoff_inner < cutoff_outer <= tube_radius")
        if self.delta <= 0 or self.delta >= self.tube_radius:
            raise ConfigError("iteration.delta must lie in (0, tube_radius)")
        if self.tol_fix <= 0:
            raise ConfigError("iteration.tol_fix must be positive")
        if self.t_ratio <= 1.0 or self.t_min <= 0 or self.t_max <= self.t_min:
            raise ConfigError("iteration schedule needs t_ratio > 1 and t_max > t_min > 0")
        if self.quad_panels < 4 or self.quad_panels % 2:
            raise ConfigError("iteration.quad_panels must be an even integer >= 4")
        if self.mode not in ("similarity_frame", "space_time"):
            raise ConfigError(f"iteration.mode must be similarity_frame or space_time, got {self.mode!r}")
        if self.truncation < 6.0:
            raise ConfigError("heat.truncation must be >= 6 (tail mass)")
        if self.rho_max < 20.0:
            raise ConfigError("oracle.rho_max must be >= 20")
        if self.tol_shoot > 1e-8:
            raise ConfigError("oracle.tol_shoot must be <= 1e-8")
        if self.max_iter < 1:
            raise ConfigError("iteration.max_iter must be >= 1")
        return self


_SECTIONS = {
    "run": ("dimension", "alpha", "seed", "threads"),
    "grid": ("points_per_axis", "half_width"),
    "manifold": ("tube_radius", "cutoff_inner", "cutoff_outer"),
    "iteration": (
        "delta",
        "max_iter",
        "tol_fix",
        "t_min",
        "t_ratio",
        "t_max",
        "quad_panels",
        "mode",
    ),
    "heat": ("truncation",),
    "oracle": ("rho_max", "tol_shoot"),
    "verify": (
        "pde_residual_max",
        "dist_max",
        "defect2_max",
        "defect4_max",
        "lei_slack",
        "holder_pairs",
        "defect_samples",
    ),
    "report": ("report_times",),
}

_INT_KEYS = {"dimension", "seed", "threads", "points_per_axis", "max_iter", "quad_panels", "holder_pairs", "defect_samples"}
_STR_KEYS = {"mode"}
_TUPLE_KEYS = {"report_times"}


def default_config(dimension: int = 2) -> RunConfig:
    if dimension not in GRID_DEFAULTS:
        raise ConfigError(f"dimension must be 2 or 3, got {dimension}")
    m, r = GRID_DEFAULTS[dimension]
    return RunConfig(dimension=dimension, points_per_axis=m, half_width=r)


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _STR_KEYS:
            return raw
        if key in _TUPLE_KEYS:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def load_config(path: str | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Defaults, then the INI file, then `section.key=value` overrides.

    The grid defaults follow the dimension unless the file or an override
    pins them explicitly."""
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SECTIONS[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                values[key] = _parse_value(key, raw)
    explicit_grid = {"points_per_axis", "half_width"} & set(values)
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, raw = item.split("=", 1)
        section, key = target.split(".", 1)
        section, key = section.strip(), key.strip()
        if section not in _SECTIONS or key not in _SECTIONS[section]:
            raise ConfigError(f"unknown override {section}.{key}")
        values[key] = _parse_value(key, raw)
        if key in ("points_per_axis", "half_width"):
            explicit_grid.add(key)

    dimension = int(values.get("dimension", 2))
    cfg = default_config(dimension)
    for key in ("points_per_axis", "half_width"):
        if key not in explicit_grid:
            values.pop(key, None)
    cfg = replace(cfg, **values)
    return cfg.validate()


def dump_config(cfg: RunConfig) -> str:
    """Effective configuration as INI text (stable section/key order)."""
    out = io.StringIO()
    for section, keys in _SECTIONS.items():
        out.write(f"[{section}]\n")
        for key in keys:
            val = getattr(cfg, key)
            if isinstance(val, tuple):
                val = ",".join(repr(v) for v in val)
            elif isinstance(val, float):
                val = repr(val)
            out.write(f"{key} = {val}\n")
        out.write("\n")
    return out.getvalue()
