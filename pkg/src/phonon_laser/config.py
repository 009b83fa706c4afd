"""INI run configuration with unit-suffixed values.

Values are converted to SI at parse time; frequencies become angular
(rad/s). The echo writes every value back in canonical SI units with
``repr`` floats, so ``parse_text(echo(cfg)) == cfg`` exactly.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ValidationError

TWO_PI = 2 * math.pi

# suffix -> SI factor; frequency factors already include 2*pi except rad/s
UNITS = {
    "freq": {"rad/s": 1.0, "Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6, "GHz": TWO_PI * 1e9},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6, "nW": 1e-9},
    "mass": {"kg": 1.0, "g": 1e-3},
    "temp": {"K": 1.0},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12},
}
CANONICAL = {"freq": "rad/s", "length": "m", "power": "W", "mass": "kg", "temp": "K", "time": "s"}

# section -> key -> (kind, is_list)
SCHEMA = {
    "run": {"experiment": ("str", False), "seed": ("int", False), "out": ("str", False), "jobs": ("int", False)},
    "device": {
        "wavelength": ("length", False),
        "q_opt": ("float", False),
        "taper_fraction": ("float", False),
        "bare_detuning": ("freq", False),
        "radius": ("length", False),
        "temperature": ("temp", False),
        "kappa_0": ("freq", False),
        "decay_length": ("length", False),
    },
    "mechanics": {"omega_m": ("freq", True), "q_mech": ("float", True), "m_eff": ("mass", True)},
    "pump": {
        "power": ("power", False),
        "power_fraction": ("float", False),
        "branch": ("str", False),
        "detuning": ("freq", False),
    },
    "sim": {
        "dt": ("time", False),
        "duration": ("time", False),
        "settle": ("time", False),
        "decimation": ("int", False),
        "noise": ("bool", False),
        "n_opt": ("float", False),
        "nperseg": ("int", False),
    },
    "splitting": {"gaps": ("length", True)},
    "crossing": {"detunings": ("freq", True), "kappa": ("freq", False)},
    "gain-tune": {"splittings": ("freq", True), "target_mode": ("int", False), "n_corr": ("float", False)},
    "threshold": {
        "powers": ("power", True),
        "threshold_fractions": ("float", True),
        "mode": ("int", False),
        "settle_periods": ("float", False),
        "record_periods": ("float", False),
    },
    "cooling": {"powers": ("power", True), "gain_ratios": ("float", True), "mode": ("int", False),
                "n_corr": ("float", False)},
    "analyze-psd": {"input": ("str", False), "fit_center": ("freq", False), "fit_span": ("freq", False)},
    "calibrate": {"gaps": ("length", True), "splittings": ("freq", True)},
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf|nan)\s*(\S*)\s*$")


def _parse_scalar(raw, kind, where):
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"{where}: expected a boolean, got {raw!r}", key=where)
    m = _NUM.match(raw)
    if not m:
        raise ValidationError(f"{where}: cannot parse {raw!r} as a number", key=where)
    number, suffix = m.groups()
    if kind == "int":
        if suffix or not re.fullmatch(r"[-+]?\d+", number):
            raise ValidationError(f"{where}: expected an integer, got {raw!r}", key=where)
        return int(number)
    value = float(number)
    if kind == "float":
        if suffix:
            raise ValidationError(f"{where}: dimensionless value takes no unit, got {suffix!r}", key=where)
        return value
    table = UNITS[kind]
    if not suffix:
        raise ValidationError(
            f"{where}: missing unit suffix (one of {', '.join(table)})", key=where)
    if suffix not in table:
        raise ValidationError(
            f"{where}: unknown unit {suffix!r} (expected one of {', '.join(table)})", key=where)
    return value * table[suffix]


def _format_scalar(value, kind):
    if kind == "str":
        return value
    if kind == "bool":
        return "true" if value else "false"
    if kind == "int":
        return str(value)
    if kind == "float":
        return repr(float(value))
    return f"{float(value)!r} {CANONICAL[kind]}"


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: ``sections[name][key]`` holds SI values.

    List-valued keys are stored as tuples.
    """

    sections: dict = field(default_factory=dict)

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def section(self, name):
        return dict(self.sections.get(name, {}))

    def with_value(self, section, key, value) -> "RunConfig":
        new = {s: dict(v) for s, v in self.sections.items()}
        new.setdefault(section, {})[key] = value
        return RunConfig(new)

    def as_dict(self):
        return {s: {k: (list(v) if isinstance(v, tuple) else v) for k, v in kv.items()}
                for s, kv in self.sections.items()}


def parse_value(section, key, raw):
    """Parse one raw string for ``section.key`` against the schema."""
    where = f"{section}.{key}"
    if section not in SCHEMA:
        raise ValidationError(f"unknown section [{section}]", key=section)
    if key not in SCHEMA[section]:
        raise ValidationError(f"unknown key {where!r}", key=where)
    kind, is_list = SCHEMA[section][key]
    if is_list:
        parts = [p for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValidationError(f"{where}: empty list", key=where)
        return tuple(_parse_scalar(p, kind, where) for p in parts)
    return _parse_scalar(raw, kind, where)


def parse_text(text: str, source="<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ValidationError(f"{source}: {exc}", key="config") from exc
    sections = {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ValidationError(f"{source}: unknown section [{name}]", key=name)
        sections[name] = {key: parse_value(name, key, raw) for key, raw in cp.items(name)}
    return RunConfig(sections)


def bundled_config_dir():
    return resources.files("phonon_laser") / "configs"


def resolve_path(name) -> Path:
    """Existing file path, else a bundled config of that name."""
    path = Path(name)
    if path.is_file():
        return path
    bundled = bundled_config_dir() / path.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ValidationError(f"config file {str(name)!r} not found", key="config")


def load(name) -> RunConfig:
    path = resolve_path(name)
    return parse_text(path.read_text(encoding="utf-8"), source=str(path))


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply ``section.key=value`` strings."""
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValidationError(f"override {item!r} must look like section.key=value", key="set")
        lhs, raw = item.split("=", 1)
        section, key = lhs.strip().rsplit(".", 1)
        cfg = cfg.with_value(section, key, parse_value(section, key, raw))
    return cfg


def echo(cfg: RunConfig) -> str:
    """Canonical INI text of ``cfg`` in SI units."""
    lines = []
    for section in SCHEMA:
        if section not in cfg.sections:
            continue
        lines.append(f"[{section}]")
        for key in SCHEMA[section]:
            if key not in cfg.sections[section]:
                continue
            kind, is_list = SCHEMA[section][key]
            value = cfg.sections[section][key]
            text = ", ".join(_format_scalar(v, kind) for v in value) if is_list else _format_scalar(value, kind)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)
