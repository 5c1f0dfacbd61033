"""INI configuration: defaults, overrides and conversion to domain objects."""
from __future__ import annotations

import configparser
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .exponents import ExponentSet, conjugate_exponent


def default_config_text() -> str:
    return resources.files("cylbubble").joinpath("data/default.ini").read_text()


def load_config(path: str | Path | None = None, overrides=()) -> configparser.ConfigParser:
    """Shipped defaults, then ``path``, then ``section.key=value`` overrides."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(default_config_text())
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        if not cp.has_section(section):
            raise ConfigError(f"unknown config section {section!r}")
        cp.set(section, name, value.strip())
    return cp


def parse_number(raw: str) -> float:
    """Float literal or a fraction such as ``7/3``."""
    raw = raw.strip()
    return float(Fraction(raw)) if "/" in raw else float(raw)


def _float(cp, section, key):
    try:
        return parse_number(cp.get(section, key))
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def _int(cp, section, key):
    raw = cp.get(section, key)
    try:
        return int(raw, 0)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def float_list(cp, section, key) -> list[float]:
    try:
        return [parse_number(v) for v in cp.get(section, key).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


def exponents_from_config(cp) -> ExponentSet:
    s = "exponents"
    N = _int(cp, s, "N")
    q = _float(cp, s, "q")
    p_raw = cp.get(s, "p", fallback="").strip()
    try:
        p = parse_number(p_raw) if p_raw else conjugate_exponent(N, q)
    except ValueError as exc:
        raise ConfigError(f"exponents.p: {exc}") from exc
    kw = {k: _float(cp, s, k) for k in
          ("m1", "m2", "theta1", "theta2", "c1", "c2", "r0", "delta", "tau")}
    return ExponentSet(N=N, p=p, q=q, **kw)


def as_dict(cp) -> dict:
    return {sec: dict(cp.items(sec)) for sec in cp.sections()}


def get_float(cp, section, key):
    return _float(cp, section, key)


def get_int(cp, section, key):
    return _int(cp, section, key)
