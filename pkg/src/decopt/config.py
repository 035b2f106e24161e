"""INI-style experiment configs.

One section per concern (``graph``, ``weights``, ``objective``,
``algorithm``, ``schedule``, ``budget``, ``seeds``); keys are the field names
of the matching dataclasses in :mod:`decopt.simulator`. Overrides use
dotted keys, e.g. ``schedule.alpha=0.1``. Comparison files add one
``[variant NAME]`` section per member experiment, holding dotted overrides.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path

from .simulator import (
    AlgorithmConfig,
    BudgetConfig,
    ExperimentConfig,
    GraphConfig,
    ObjectiveConfig,
    ScheduleConfig,
    WeightsConfig,
)

__all__ = ["ConfigError", "SECTIONS", "load_config", "load_comparison", "apply_overrides", "parse_overrides", "dump_config"]

SECTIONS = {
    "graph": GraphConfig,
    "weights": WeightsConfig,
    "objective": ObjectiveConfig,
    "algorithm": AlgorithmConfig,
    "schedule": ScheduleConfig,
    "budget": BudgetConfig,
}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    pass


def _coerce(kind: type, key: str, raw: str):
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(raw)
            return low in _TRUE
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def _field_types(cls) -> dict[str, type]:
    return {f.name: type(f.default) for f in dataclasses.fields(cls)}


def apply_overrides(cfg: ExperimentConfig, overrides: dict[str, str]) -> ExperimentConfig:
    """Return a copy of ``cfg`` with dotted-key string overrides applied."""
    parts = {name: getattr(cfg, name) for name in SECTIONS}
    seed = cfg.seed
    for dotted, raw in overrides.items():
        section, _, key = dotted.partition(".")
        if section == "seeds":
            if key != "master":
                raise ConfigError(f"unknown key {dotted!r}")
            seed = _coerce(int, dotted, raw)
            continue
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section {section!r} in {dotted!r}")
        types = _field_types(SECTIONS[section])
        if key not in types:
            raise ConfigError(f"unknown key {dotted!r}")
        parts[section] = dataclasses.replace(parts[section], **{key: _coerce(types[key], dotted, raw)})
    try:
        return ExperimentConfig(**parts, seed=seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        out[key.strip()] = value.strip()
    return out


def _read(path: str | Path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (algorithm.T)
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    return parser


def _base_overrides(parser: configparser.ConfigParser, allow_variants: bool) -> dict[str, str]:
    flat = {}
    for section in parser.sections():
        if section.startswith("variant "):
            if not allow_variants:
                raise ConfigError(f"variant section [{section}] only allowed in comparison files")
            continue
        if section not in SECTIONS and section != "seeds":
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            flat[f"{section}.{key}"] = value
    return flat


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    parser = _read(path)
    flat = _base_overrides(parser, allow_variants=False)
    flat.update(overrides or {})
    return apply_overrides(ExperimentConfig(), flat)


def load_comparison(path: str | Path, overrides: dict[str, str] | None = None) -> dict[str, ExperimentConfig]:
    """Member experiments of a comparison file, in file order."""
    parser = _read(path)
    flat = _base_overrides(parser, allow_variants=True)
    flat.update(overrides or {})
    base = apply_overrides(ExperimentConfig(), flat)
    out = {}
    for section in parser.sections():
        if section.startswith("variant "):
            name = section[len("variant "):].strip()
            out[name] = apply_overrides(base, dict(parser.items(section)))
    if not out:
        raise ConfigError(f"{path}: no [variant NAME] sections")
    return out


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize to the INI format read by :func:`load_config`."""
    lines = []
    for name in SECTIONS:
        lines.append(f"[{name}]")
        for f in dataclasses.fields(SECTIONS[name]):
            v = getattr(getattr(cfg, name), f.name)
            lines.append(f"{f.name} = {repr(v) if isinstance(v, float) else str(v).lower() if isinstance(v, bool) else v}")
        lines.append("")
    lines += ["[seeds]", f"master = {cfg.seed}", ""]
    return "\n".join(lines)
