"""Flat TOML-style run config files: ``key = value`` per line.

Supported values: quoted strings, integers, floats, true/false, and
single-line arrays of those. Section headers are rejected on purpose; run
configs stay flat so precedence (flags > file > defaults) is obvious.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


def _parse_scalar(raw: str, path: str, line_no: int) -> Any:
    raw = raw.strip()
    if not raw:
        raise ConfigError(f"{path}: line {line_no}: empty value")
    if raw.startswith('"') or raw.startswith("'"):
        quote = raw[0]
        if len(raw) < 2 or not raw.endswith(quote):
            raise ConfigError(f"{path}: line {line_no}: unterminated string")
        return raw[1:-1]
    if raw == "true":
        return True
    if raw == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    raise ConfigError(f"{path}: line {line_no}: cannot parse value {raw!r}")


def load_config(path: str | Path) -> dict[str, Any]:
    """Parse a flat key = value file into a dict."""
    out: dict[str, Any] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if stripped.startswith("["):
                raise ConfigError(f"{path}: line {line_no}: sections are not supported")
            if "=" not in stripped:
                raise ConfigError(f"{path}: line {line_no}: expected key = value")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            # trailing comment, unless the # sits inside a quoted string
            if "#" in raw and not (raw.startswith(('"', "'")) and raw.rstrip().endswith(raw[0])):
                raw = raw.split("#", 1)[0].strip()
            if raw.startswith("[") and raw.endswith("]"):
                inner = raw[1:-1].strip()
                out[key] = (
                    [] if not inner else [_parse_scalar(v, str(path), line_no) for v in inner.split(",")]
                )
            else:
                out[key] = _parse_scalar(raw, str(path), line_no)
    return out


def resolve(
    defaults: dict[str, Any],
    file_values: dict[str, Any] | None,
    flag_values: dict[str, Any],
) -> dict[str, Any]:
    """Merge run settings: explicit flags beat the config file beat defaults.

    Flags with value None count as "not given". File keys outside the
    defaults are rejected so typos fail loudly.
    """
    resolved = dict(defaults)
    if file_values:
        unknown = set(file_values) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_values)
    for key, value in flag_values.items():
        if value is not None:
            resolved[key] = value
    return resolved
