"""Flat key-value config files; CLI flags mirror keys 1:1 and win."""

from __future__ import annotations

from .errors import DataError


def read_kv_config(path: str) -> dict[str, str]:
    """Lines of `key = value`; '#' starts a comment; blank lines ignored."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path} line {lineno}: expected `key = value`")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def write_kv_config(path: str, values: dict):
    with open(path, "w", encoding="utf-8") as f:
        for key, value in values.items():
            f.write(f"{key} = {value}\n")


def coerce(values: dict[str, str], schema: dict[str, type],
           where: str = "config") -> dict:
    """Convert string values per a {key: type} schema; unknown keys error."""
    out = {}
    for key, raw in values.items():
        if key not in schema:
            raise DataError(f"{where}: unknown key {key!r}")
        kind = schema[key]
        try:
            if kind is bool:
                out[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                out[key] = kind(raw)
        except ValueError:
            raise DataError(f"{where}: bad value for {key!r}: {raw!r}") from None
    return out
