"""Run configuration: packaged TOML defaults, user file, ``section.key=value`` overrides."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

import tomli

from .ensemble import EnsembleConfig
from .integrate import IntegratorConfig
from .model import ParameterError, PhysParams, SlitMomentsError, validate_params
from .potential import PotentialKind

__all__ = ["ConfigError", "AnalysisConfig", "OutputConfig", "RunConfig", "default_table", "load_config"]


class ConfigError(SlitMomentsError, ValueError):
    """Invalid configuration; ``field`` is the dotted key at fault."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class AnalysisConfig:
    bin_width: float = 0.1
    y_range: tuple[float, float] = (-6.0, 6.0)
    smoothing_bins: float = 2.0
    envelope: bool = True
    time_bins: int = 50
    snapshot_t: float = 0.12
    probe_energy: Optional[float] = None


@dataclass(frozen=True)
class OutputConfig:
    dir: Path = Path("out")
    svg: bool = False
    retain_trajectories: bool = False
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    physics: PhysParams
    kind: PotentialKind
    integrator: IntegratorConfig
    ensemble: EnsembleConfig
    analysis: AnalysisConfig
    output: OutputConfig
    seed: int


def default_table() -> dict:
    text = resources.files("slitmoments").joinpath("data/defaults.toml").read_text("utf-8")
    return tomli.loads(text)


def _merge(base: dict, extra: Mapping, prefix: str = "") -> None:
    for key, value in extra.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(dotted, "unknown configuration key")
        if isinstance(value, Mapping):
            if not isinstance(base.get(key), dict):
                raise ConfigError(dotted, "expected a scalar, got a table")
            _merge(base[key], value, dotted + ".")
        else:
            base[key] = value


def _coerce(raw: str, like):
    if isinstance(like, bool):
        low = raw.strip().lower()
        if low in ("true", "on", "1", "yes"):
            return True
        if low in ("false", "off", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float) or like is None:
        return float(raw)
    return raw


def apply_override(table: dict, dotted: str, raw: str) -> None:
    """Set ``table[section][key]`` from a string, typed like the existing value."""
    parts = dotted.split(".")
    node = table
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(dotted, "unknown configuration key")
        node = node[part]
    key = parts[-1]
    if key not in node:
        raise ConfigError(dotted, "unknown configuration key")
    try:
        node[key] = _coerce(raw, node.get(key))
    except ValueError as exc:
        raise ConfigError(dotted, str(exc)) from None


def _build(section: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ParameterError as exc:
        raise ConfigError(f"{section}.{exc.field}", str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from None


def load_config(path=None, overrides: Optional[Mapping[str, str]] = None) -> RunConfig:
    table = default_table()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                user = tomli.load(fh)
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from None
        _merge(table, user)
    for dotted, raw in (overrides or {}).items():
        apply_override(table, dotted, raw)
    return from_table(table)


def from_table(table: dict) -> RunConfig:
    ph = table["physics"]
    physics = _build(
        "physics", PhysParams,
        m=float(ph["m"]), omega=float(ph["omega"]), v0=float(ph["v0"]),
        alpha=float(ph["alpha"]), hbar=float(ph["hbar"]), u=float(ph["u"]),
    )
    try:
        validate_params(physics)
    except ParameterError as exc:
        raise ConfigError(f"physics.{exc.field}", str(exc)) from None
    except SlitMomentsError as exc:
        raise ConfigError(f"physics.{getattr(exc, 'field', 'u')}", str(exc)) from None
    kind = _build("physics.potential", PotentialKind, tag=ph["potential"], omega_h=float(ph["omega_h"]))

    it = table["integrator"]
    integrator = _build(
        "integrator", IntegratorConfig,
        rtol=float(it["rtol"]), atol=float(it["atol"]), h0=float(it["h0"]),
        h_max=float(it["h_max"]), t_max=float(it["t_max"]),
        x_screen=float(it["x_screen"]), x_reflect=float(it["x_reflect"]),
    )

    seed = int(table["seed"])
    en = table["ensemble"]
    ensemble = _build(
        "ensemble", EnsembleConfig,
        n=int(en["n"]), y_range=(float(en["y_min"]), float(en["y_max"])),
        sampler=str(en["sampler"]), seed=seed, x0=float(en["x0"]), px0=float(en["px0"]),
        py0=float(en["py0"]), sx0=float(en["sx0"]), sy0=float(en["sy0"]),
    )
    if not integrator.x_screen < ensemble.x0 <= integrator.x_reflect:
        raise ConfigError("ensemble.x0", "must lie in (x_screen, x_reflect]")

    an = table["analysis"]
    analysis = _build(
        "analysis", AnalysisConfig,
        bin_width=float(an["bin_width"]), y_range=(float(an["y_min"]), float(an["y_max"])),
        smoothing_bins=float(an["smoothing_bins"]), envelope=bool(an["envelope"]),
        time_bins=int(an["time_bins"]), snapshot_t=float(an["snapshot_t"]),
        # 0 selects the automatic probe energy
        probe_energy=float(an["probe_energy"]) or None,
    )
    if not analysis.bin_width > 0:
        raise ConfigError("analysis.bin_width", "must be > 0")

    out = table["output"]
    output = OutputConfig(
        dir=Path(out["dir"]), svg=bool(out["svg"]),
        retain_trajectories=bool(out["retain_trajectories"]), workers=int(out["workers"]),
    )
    if output.workers < 1:
        raise ConfigError("output.workers", "must be >= 1")
    return RunConfig(physics, kind, integrator, ensemble, analysis, output, seed)


def as_table(cfg: RunConfig) -> dict:
    """Flat JSON-friendly view, echoed into run summaries."""
    return copy.deepcopy({
        "seed": cfg.seed,
        "physics": {**cfg.physics.__dict__, "potential": cfg.kind.tag, "omega_h": cfg.kind.omega_h},
        "integrator": dict(cfg.integrator.__dict__),
        "ensemble": {k: v for k, v in cfg.ensemble.__dict__.items()},
    })
