"""Line-oriented ``key = value`` files used for plans, tuning specs and solver configs.

Blank lines and ``#`` comments are ignored. Keys are dotted identifiers;
values run to the end of the line with surrounding whitespace stripped.
Floats are written with ``repr`` so they reload bit-exactly.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError, ParseError

_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")


def parse_kv(text: str) -> list[tuple[str, str]]:
    """Split ``text`` into ``(key, value)`` pairs in file order.

    Raises :class:`ParseError` with the byte offset of the offending line.
    """
    pairs = []
    offset = 0
    for line in text.splitlines(keepends=True):
        body = line.split("#", 1)[0].strip()
        if body:
            key, sep, value = body.partition("=")
            key = key.strip()
            if not sep or not _KEY.match(key):
                raise ParseError(f"expected 'key = value', got {body!r}", offset)
            pairs.append((key, value.strip()))
        offset += len(line.encode("utf-8"))
    return pairs


def read_kv(path) -> list[tuple[str, str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text", exc.start) from exc
    return parse_kv(text)


def kv_dict(pairs: Iterable[tuple[str, str]]) -> dict[str, str]:
    """Collect pairs into a dict, rejecting duplicate keys."""
    out: dict[str, str] = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = value
    return out


def format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"cannot serialize non-finite value {value!r}")
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def format_kv(items: Mapping[str, object]) -> str:
    return "".join(f"{key} = {format_value(value)}\n" for key, value in items.items())


def parse_inline(tokens: Iterable[str]) -> dict[str, str]:
    """Parse ``key=value`` tokens as found on a single plan line or command line."""
    out: dict[str, str] = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not _KEY.match(key):
            raise ConfigError(f"expected key=value, got {tok!r}")
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = value
    return out


def to_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def to_float_list(text: str) -> tuple[float, ...]:
    """Comma-separated floats, or ``logspace(a, b, n)`` for ``n`` values from 10^a to 10^b."""
    text = text.strip()
    m = re.fullmatch(r"logspace\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)", text)
    try:
        if m:
            a, b, n = float(m.group(1)), float(m.group(2)), int(m.group(3))
            if n < 1:
                raise ConfigError("logspace needs at least one point")
            if n == 1:
                return (10.0 ** a,)
            return tuple(10.0 ** (a + (b - a) * i / (n - 1)) for i in range(n))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from exc
